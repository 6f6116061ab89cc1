#include "wishart/randkit.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "wishart/errors.hpp"

namespace wishart {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt6 = std::sqrt(6.0);
const double kOuter = std::sqrt(3.0 + std::sqrt(6.0));
const double kInner = std::sqrt(3.0 - std::sqrt(6.0));
const double kOuterProb = (std::sqrt(6.0) - 2.0) / (4.0 * std::sqrt(6.0));

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

void RngStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  out_ = philox4x32_10(ctr, {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  ++block_;
  next_ = 0;
}

RngStream::result_type RngStream::operator()() {
  if (next_ > 2) refill();
  const std::uint64_t v = (static_cast<std::uint64_t>(out_[next_]) << 32) | out_[next_ + 1];
  next_ += 2;
  return v;
}

double RngStream::uniform() {
  // 53 random bits, shifted by half an ulp so 0 is never returned.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double gauss(RngStream& rng) { return rng.normal_dist()(rng); }

double moment_match_3(RngStream& rng) {
  const double u = rng.uniform();
  if (u < 1.0 / 6.0) return kSqrt3;
  if (u < 1.0 / 3.0) return -kSqrt3;
  return 0.0;
}

double moment_match_5(RngStream& rng) {
  const double u = rng.uniform();
  const double sign = u < 0.5 ? 1.0 : -1.0;
  const double w = u < 0.5 ? u : u - 0.5;
  return sign * (w < kOuterProb ? kOuter : kInner);
}

std::vector<Atom> moment_match_3_law() { return {{kSqrt3, 1.0 / 6.0}, {-kSqrt3, 1.0 / 6.0}, {0.0, 2.0 / 3.0}}; }

std::vector<Atom> moment_match_5_law() {
  const double inner = 0.5 - kOuterProb;
  return {{kOuter, kOuterProb}, {-kOuter, kOuterProb}, {kInner, inner}, {-kInner, inner}};
}

double noncentral_chisq(RngStream& rng, double degree, double noncentrality) {
  if (!(degree >= 0.0) || !std::isfinite(degree)) throw Error(Errc::InvalidDegree, "chi-square degree must be >= 0");
  if (!(noncentrality >= 0.0) || !std::isfinite(noncentrality))
    throw Error(Errc::InvalidDegree, "noncentrality must be >= 0");
  if (degree > 1.0) {
    const double z = gauss(rng) + std::sqrt(noncentrality);
    std::gamma_distribution<double> gamma((degree - 1.0) / 2.0, 2.0);
    return z * z + gamma(rng);
  }
  long n = 0;
  if (noncentrality > 0.0) {
    std::poisson_distribution<long> poisson(noncentrality / 2.0);
    n = poisson(rng);
  }
  const double shape = degree / 2.0 + static_cast<double>(n);
  if (shape == 0.0) return 0.0;
  std::gamma_distribution<double> gamma(shape, 2.0);
  return gamma(rng);
}

void validate(const CirParams& p) {
  if (!(p.degree >= 0.0) || !std::isfinite(p.degree)) throw Error(Errc::InvalidDegree, "CIR degree must be >= 0");
  if (!(p.x0 >= 0.0) || !std::isfinite(p.x0)) throw Error(Errc::InvalidDegree, "CIR initial value must be >= 0");
  if (!(p.t >= 0.0) || !std::isfinite(p.t)) throw Error(Errc::NegativeTime, "CIR time step must be >= 0");
}

double cir_step_exact(RngStream& rng, const CirParams& p) {
  validate(p);
  if (p.t == 0.0) return p.x0;
  if (p.degree + p.x0 == 0.0) return 0.0;
  return p.t * noncentral_chisq(rng, p.degree, p.x0 / p.t);
}

// ---------------------------------------------------------------------------
// Second order: with sigma = 2 and no mean reversion the splitting reads
// (sqrt(x + (deg - 1) t / 2) + sqrt(t) Y)^2 + (deg - 1) t / 2.

double cir_order2_threshold(double degree, double t) {
  if (degree >= 1.0) return 0.0;
  const double h = (1.0 - degree) * t / 2.0;
  const double r = std::sqrt(h) + std::sqrt(3.0 * t);
  return h + r * r;
}

namespace {

std::vector<Atom> two_point_law(const CirParams& p) {
  const double m1 = p.x0 + p.degree * p.t;
  const double m2 = m1 * m1 + 2.0 * p.degree * p.t * p.t + 4.0 * p.x0 * p.t;
  if (m1 == 0.0) return {{0.0, 1.0}};
  const double delta = 1.0 - m1 * m1 / m2;
  const double pi = 0.5 * (1.0 - std::sqrt(std::max(delta, 0.0)));
  return {{m1 / (2.0 * pi), pi}, {m1 / (2.0 * (1.0 - pi)), 1.0 - pi}};
}

}  // namespace

std::vector<Atom> cir_order2_law(const CirParams& p) {
  validate(p);
  if (p.t == 0.0) return {{p.x0, 1.0}};
  if (p.degree + p.x0 == 0.0) return {{0.0, 1.0}};
  if (p.x0 < cir_order2_threshold(p.degree, p.t)) return two_point_law(p);
  const double drift = (p.degree - 1.0) * p.t / 2.0;
  const double base = std::sqrt(p.x0 + drift);
  std::vector<Atom> law;
  for (const Atom& y : moment_match_3_law()) {
    const double s = base + std::sqrt(p.t) * y.value;
    law.push_back({std::max(s * s + drift, 0.0), y.prob});
  }
  return law;
}

double cir_step_order2(RngStream& rng, const CirParams& p) {
  validate(p);
  if (p.t == 0.0) return p.x0;
  if (p.degree + p.x0 == 0.0) return 0.0;
  if (p.x0 < cir_order2_threshold(p.degree, p.t)) return sample_atoms(rng, two_point_law(p));
  const double drift = (p.degree - 1.0) * p.t / 2.0;
  const double s = std::sqrt(p.x0 + drift) + std::sqrt(p.t) * moment_match_3(rng);
  return std::max(s * s + drift, 0.0);
}

// ---------------------------------------------------------------------------
// Third order: Golub-Welsch on the standardized moments of t chi2(deg, x0/t).

std::vector<Atom> cir_order3_law(const CirParams& p) {
  validate(p);
  if (p.t == 0.0) return {{p.x0, 1.0}};
  const double mean = p.x0 + p.degree * p.t;
  const double var = 2.0 * p.degree * p.t * p.t + 4.0 * p.x0 * p.t;
  if (var <= 0.0) return {{mean, 1.0}};
  const double sd = std::sqrt(var);

  constexpr int kNodes = 4;
  constexpr int kMoments = 2 * kNodes + 1;
  // Cumulants kappa_n = 2^(n-1) (n-1)! (deg t^n + n x0 t^(n-1)), standardized.
  std::array<double, kMoments> cum{};
  double fact = 1.0;
  for (int n = 2; n < kMoments; ++n) {
    fact *= (n - 1);
    const double kappa = std::ldexp(fact, n - 1) * (p.degree * std::pow(p.t, n) + n * p.x0 * std::pow(p.t, n - 1));
    cum[n] = kappa / std::pow(sd, n);
  }
  std::array<double, kMoments> mom{};
  mom[0] = 1.0;
  for (int n = 1; n < kMoments; ++n) {
    double acc = 0.0;
    double binom = 1.0;  // C(n-1, j-1)
    for (int j = 1; j <= n; ++j) {
      acc += binom * cum[j] * mom[n - j];
      binom = binom * (n - j) / j;
    }
    mom[n] = acc;
  }
  Eigen::Matrix<double, kNodes + 1, kNodes + 1> hankel;
  for (int i = 0; i <= kNodes; ++i)
    for (int j = 0; j <= kNodes; ++j) hankel(i, j) = mom[i + j];
  Eigen::LLT<Eigen::Matrix<double, kNodes + 1, kNodes + 1>> llt(hankel);
  const auto r = llt.matrixU().toDenseMatrix();
  bool ok = llt.info() == Eigen::Success;
  for (int i = 0; ok && i <= kNodes; ++i) ok = r(i, i) > 1e-12;
  if (!ok) return {};  // caller falls back to exact sampling

  Eigen::Matrix<double, kNodes, kNodes> jacobi = Eigen::Matrix<double, kNodes, kNodes>::Zero();
  for (int j = 0; j < kNodes; ++j) {
    const double prev = j == 0 ? 0.0 : r(j - 1, j) / r(j - 1, j - 1);
    jacobi(j, j) = r(j, j + 1) / r(j, j) - prev;
    if (j + 1 < kNodes) {
      const double beta = r(j + 1, j + 1) / r(j, j);
      jacobi(j, j + 1) = beta;
      jacobi(j + 1, j) = beta;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kNodes, kNodes>> es(jacobi);
  if (es.info() != Eigen::Success) return {};
  std::vector<Atom> law;
  for (int i = 0; i < kNodes; ++i) {
    const double w = es.eigenvectors()(0, i);
    law.push_back({std::max(mean + sd * es.eigenvalues()(i), 0.0), w * w});
  }
  return law;
}

double cir_step_order3(RngStream& rng, const CirParams& p) {
  validate(p);
  if (p.t == 0.0) return p.x0;
  if (p.degree + p.x0 == 0.0) return 0.0;
  const std::vector<Atom> law = cir_order3_law(p);
  if (law.empty()) return cir_step_exact(rng, p);
  return sample_atoms(rng, law);
}

double sample_atoms(RngStream& rng, const std::vector<Atom>& law) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (const Atom& a : law) {
    acc += a.prob;
    if (u < acc) return a.value;
  }
  return law.back().value;
}

}  // namespace wishart

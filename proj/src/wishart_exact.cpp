#include "wishart/wishart_exact.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace wishart {

namespace {

constexpr double kResidualTol = 1e-9;

double draw_gauss(RngStream& rng, GaussDraw g) {
  switch (g) {
    case GaussDraw::match3:
      return moment_match_3(rng);
    case GaussDraw::match5:
      return moment_match_5(rng);
    case GaussDraw::gaussian:
      break;
  }
  return gauss(rng);
}

double draw_cir(RngStream& rng, const CirParams& p, CirDraw c) {
  switch (c) {
    case CirDraw::order2:
      return cir_step_order2(rng, p);
    case CirDraw::order3:
      return cir_step_order3(rng, p);
    case CirDraw::exact:
      break;
  }
  return cir_step_exact(rng, p);
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(Errc::NegativeTime, "time step must be finite and >= 0");
}

void check_alpha(double alpha, int d) {
  if (!std::isfinite(alpha) || alpha < d - 1) throw Error(Errc::InvalidAlpha, "alpha must be >= d - 1");
}

}  // namespace

void validate(const WishartParams& p) {
  const int d = p.dim();
  if (d < 1) throw Error(Errc::IncompatibleDims, "dimension must be positive");
  if (p.b.rows() != d || p.b.cols() != d || p.a.rows() != d || p.a.cols() != d)
    throw Error(Errc::IncompatibleDims, "b and a must be d x d");
  require_finite(p.b, "b");
  require_finite(p.a, "a");
  check_alpha(p.alpha, d);
  if (min_eigenvalue(p.x) < -kPsdTol * (1.0 + p.x.norm())) throw Error(Errc::NotPsd, "initial value is not PSD");
}

void validate(const CanonicalWishartParams& p) {
  const int d = p.dim();
  if (d < 1) throw Error(Errc::IncompatibleDims, "dimension must be positive");
  if (p.n < 0 || p.n > d) throw Error(Errc::IncompatibleDims, "n must lie in [0, d]");
  check_alpha(p.alpha, d);
  if (min_eigenvalue(p.x) < -kPsdTol * (1.0 + p.x.norm())) throw Error(Errc::NotPsd, "initial value is not PSD");
}

// The transposition (0 k) is handled through idx: coordinate i of the
// permuted matrix is coordinate idx[i] of x.
void l_step_inplace(RngStream& rng, Matrix& x, int k, double alpha, double t, const L1Draws& draws) {
  const int d = static_cast<int>(x.rows());
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::swap(idx[0], idx[k]);

  Matrix trailing(d - 1, d - 1);
  for (int i = 0; i + 1 < d; ++i)
    for (int j = 0; j + 1 < d; ++j) trailing(i, j) = x(idx[i + 1], idx[j + 1]);
  const ExtendedCholesky ec = extended_cholesky(assume_symmetric(std::move(trailing)));
  const int r = ec.rank;

  Vector head(r);
  for (int i = 0; i < r; ++i) head(i) = x(k, idx[1 + ec.perm[i]]);
  const Vector u = ec.c_r.triangularView<Eigen::Lower>().solve(head);

  // u11 = x_kk - h^T T^{-1} h. A perturbation E of the trailing block T and
  // of h moves it by about |E| (1 + |z|)^2 with z = T^{-1} h.
  double u11 = x(k, k) - u.squaredNorm();
  if (u11 < 0.0) {
    const double zn = r > 0 ? ec.c_r.transpose().triangularView<Eigen::Upper>().solve(u).norm() : 0.0;
    const double tol = kResidualTol * (1.0 + x.norm()) +
                       64.0 * std::numeric_limits<double>::epsilon() * x.norm() * (1.0 + zn) * (1.0 + zn);
    if (u11 < -tol) throw Error(Errc::ResidualNegative, "negative Schur residual in L1 step");
    u11 = 0.0;
  }

  const double new_u11 = draw_cir(rng, CirParams{alpha - r, u11, t}, draws.cir);
  Vector u1(r);
  const double sq = std::sqrt(t);
  for (int i = 0; i < r; ++i) u1(i) = u(i) + sq * draw_gauss(rng, draws.gauss);

  x(k, k) = new_u11 + u1.squaredNorm();
  if (d > 1) {
    Vector w(d - 1);
    w.head(r).noalias() = ec.c_r * u1;
    w.tail(d - 1 - r).noalias() = ec.k_r * u1;
    for (int i = 0; i + 1 < d; ++i) {
      const int j = idx[1 + ec.perm[i]];
      x(k, j) = w(i);
      x(j, k) = w(i);
    }
  }
}

SymMatrix finish_psd(const Matrix& m) {
  require_finite(m, "sampler output");
  Matrix s = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success) throw Error(Errc::EigenFailure, "symmetric eigensolver did not converge");
  const double lo = es.eigenvalues()(0);
  if (lo < -kPsdTol * (1.0 + s.norm())) throw Error(Errc::NotPsd, "sampler output is not PSD");
  if (lo < 0.0) {
    const Matrix& o = es.eigenvectors();
    s = o * es.eigenvalues().cwiseMax(0.0).asDiagonal() * o.transpose();
  }
  return assume_symmetric(std::move(s));
}

SymMatrix l1_exact_step(RngStream& rng, const SymMatrix& x, double alpha, double t) {
  check_time(t);
  check_alpha(alpha, x.dim());
  if (t == 0.0) return x;
  Matrix m = x.dense();
  l_step_inplace(rng, m, 0, alpha, t, L1Draws{});
  return finish_psd(m);
}

SymMatrix canonical_exact_step(RngStream& rng, const CanonicalWishartParams& p, double t, bool reverse_order) {
  check_time(t);
  check_alpha(p.alpha, p.dim());
  if (p.n < 0 || p.n > p.dim()) throw Error(Errc::IncompatibleDims, "n must lie in [0, d]");
  if (t == 0.0) return p.x;
  Matrix m = p.x.dense();
  for (int i = 0; i < p.n; ++i) l_step_inplace(rng, m, reverse_order ? p.n - 1 - i : i, p.alpha, t, L1Draws{});
  return finish_psd(m);
}

SymMatrix bartlett_sample(RngStream& rng, int d, int n, double alpha, double t) {
  check_time(t);
  check_alpha(alpha, d);
  if (n < 0 || n > d) throw Error(Errc::IncompatibleDims, "n must lie in [0, d]");
  Matrix l = Matrix::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    l(i, i) = std::sqrt(noncentral_chisq(rng, alpha - i, 0.0));
    for (int j = 0; j < i; ++j) l(i, j) = gauss(rng);
  }
  return assume_symmetric(t * l * l.transpose());
}

SymMatrix CanonicalReduction::to_canonical(const SymMatrix& x) const {
  const Matrix g = theta_inv * m_t;
  return congruence(g, x);
}

SymMatrix CanonicalReduction::from_canonical(const SymMatrix& y) const { return congruence(theta, y); }

CanonicalReduction exact_reduction(const WishartParams& p, double t) {
  validate(p);
  check_time(t);
  if (t == 0.0) throw Error(Errc::NegativeTime, "the reduction needs t > 0");
  const SymMatrix q = gram_integral(p.b, p.a, t);
  const ExtendedCholesky ec = extended_cholesky((1.0 / t) * q);
  CanonicalReduction red;
  red.n = ec.rank;
  red.m_t = matrix_exp(t * p.b);
  red.theta = ec.unpermuted_augmented();
  red.theta_inv = red.theta.partialPivLu().inverse();
  return red;
}

ExactSampler::ExactSampler(const WishartParams& p, double t) : alpha_(p.alpha), t_(t) {
  check_time(t);
  if (t > 0.0) red_ = exact_reduction(p, t);
  else validate(p);
}

SymMatrix ExactSampler::step(RngStream& rng, const SymMatrix& x) const {
  if (t_ == 0.0) return x;
  Matrix y = red_.to_canonical(x).dense();
  for (int i = 0; i < red_.n; ++i) l_step_inplace(rng, y, i, alpha_, t_, L1Draws{});
  return finish_psd(red_.theta * y * red_.theta.transpose());
}

SymMatrix general_exact_step(RngStream& rng, const WishartParams& p, double t) {
  return ExactSampler(p, t).step(rng, p.x);
}

}  // namespace wishart

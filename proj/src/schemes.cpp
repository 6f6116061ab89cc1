#include "wishart/schemes.hpp"

#include <cmath>
#include <memory>

namespace wishart {

namespace {

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(Errc::NegativeTime, "time step must be finite and >= 0");
}

bool psd_within(const SymMatrix& m, double scale) { return min_eigenvalue(m) >= -kPsdTol * (1.0 + scale); }

SymMatrix perturbed(const SymMatrix& x, double eps, double t, int nu) {
  if (eps == 0.0) return x;
  return x + (eps * std::pow(t, nu + 1)) * SymMatrix::identity(x.dim());
}

L1Draws scheme_draws(int nu, GaussMode g, CirMode c) {
  L1Draws draws;
  draws.gauss = g == GaussMode::gaussian ? GaussDraw::gaussian : g == GaussMode::match3 ? GaussDraw::match3
                                                                                          : GaussDraw::match5;
  if (c == CirMode::fast) draws.cir = nu >= 3 ? CirDraw::order3 : CirDraw::order2;
  return draws;
}

void canonical_inplace(RngStream& rng, Matrix& y, double alpha, int n, double t, const L1Draws& draws) {
  for (int k = 0; k < n; ++k) l_step_inplace(rng, y, k, alpha, t, draws);
}

void check_same_dim(const SymMatrix& in, const SymMatrix& out) {
  if (in.dim() != out.dim()) throw Error(Errc::IncompatibleDims, "composed steppers act on different dimensions");
}

}  // namespace

// ---------------------------------------------------------------------------
// LinearMap

LinearMap LinearMap::zero(int d) { return wishart(Matrix::Zero(d, d)); }

LinearMap LinearMap::wishart(const Matrix& b) {
  if (b.rows() != b.cols()) throw Error(Errc::IncompatibleDims, "drift matrix b must be square");
  require_finite(b, "drift matrix b");
  LinearMap m;
  m.d_ = static_cast<int>(b.rows());
  m.b_ = b;
  return m;
}

LinearMap LinearMap::dense(int d, const Matrix& coeffs) {
  const int p = packed_size(d);
  if (coeffs.rows() != p || coeffs.cols() != p)
    throw Error(Errc::IncompatibleDims, "dense linear map must be packed_size(d) square");
  require_finite(coeffs, "linear map coefficients");
  LinearMap m;
  m.d_ = d;
  m.dense_ = true;
  m.coeffs_ = coeffs;
  return m;
}

bool LinearMap::is_zero() const { return dense_ ? coeffs_.isZero(0.0) : b_.isZero(0.0); }

SymMatrix LinearMap::apply(const SymMatrix& y) const {
  if (y.dim() != d_) throw Error(Errc::IncompatibleDims, "linear map applied to a matrix of the wrong size");
  if (!dense_) {
    Matrix by = b_ * y.dense();
    return assume_symmetric(by + by.transpose());
  }
  return SymMatrix::from_packed(d_, coeffs_ * y.packed());
}

Matrix LinearMap::coefficients() const {
  if (dense_) return coeffs_;
  const int p = packed_size(d_);
  Matrix out(p, p);
  Vector e = Vector::Zero(p);
  for (int k = 0; k < p; ++k) {
    e(k) = 1.0;
    out.col(k) = apply(SymMatrix::from_packed(d_, e)).packed();
    e(k) = 0.0;
  }
  return out;
}

LinearMap LinearMap::conjugated(const Matrix& u) const {
  if (u.rows() != d_ || u.cols() != d_) throw Error(Errc::IncompatibleDims, "conjugator has the wrong size");
  const Eigen::PartialPivLU<Matrix> lu(u);
  const Matrix u_inv = lu.inverse();
  if (!dense_) return wishart(u_inv.transpose() * b_ * u.transpose());
  const int p = packed_size(d_);
  Matrix out(p, p);
  Vector e = Vector::Zero(p);
  for (int k = 0; k < p; ++k) {
    e(k) = 1.0;
    const SymMatrix image = apply(congruence(u.transpose(), SymMatrix::from_packed(d_, e)));
    out.col(k) = congruence(u_inv.transpose(), image).packed();
    e(k) = 0.0;
  }
  return dense(d_, out);
}

int drift_condition_violations(const LinearMap& b, int trials, std::uint64_t seed) {
  const int d = b.dim();
  if (d < 2) return 0;
  RngStream rng(seed, 0);
  int bad = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Matrix g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = gauss(rng);
    const Matrix o = Eigen::HouseholderQR<Matrix>(g).householderQ();
    const int split = 1 + static_cast<int>(rng.uniform() * (d - 1));
    Matrix x1 = Matrix::Zero(d, d), x2 = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      const double lambda = -std::log(rng.uniform());
      (i < split ? x1 : x2) += lambda * o.col(i) * o.col(i).transpose();
    }
    const SymMatrix s1 = assume_symmetric(x1), s2 = assume_symmetric(x2);
    const double value = (b.apply(s1).dense() * s2.dense()).trace();
    if (value < -1e-10 * (1.0 + s1.norm() * s2.norm())) ++bad;
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Affine parameters and the canonical form

void validate(const AffineParams& p) {
  const int d = p.dim();
  if (d < 1) throw Error(Errc::IncompatibleDims, "dimension must be positive");
  if (p.alpha_bar.dim() != d || p.B.dim() != d || p.a.rows() != d || p.a.cols() != d)
    throw Error(Errc::IncompatibleDims, "affine parameters have inconsistent dimensions");
  require_finite(p.a, "a");
  if (!psd_within(p.x, p.x.norm())) throw Error(Errc::NotPsd, "initial value is not PSD");
  const SymMatrix ata(p.a.transpose() * p.a);
  const SymMatrix gap = p.alpha_bar - static_cast<double>(d - 1) * ata;
  if (!psd_within(gap, p.alpha_bar.norm()))
    throw Error(Errc::ExistenceViolated, "alpha_bar - (d - 1) a^T a is not PSD");
}

AffineParams as_affine(const WishartParams& p) {
  validate(p);
  AffineParams out;
  out.x = p.x;
  out.a = p.a;
  out.alpha_bar = p.alpha * SymMatrix(p.a.transpose() * p.a);
  out.B = LinearMap::wishart(p.b);
  return out;
}

SymMatrix CanonicalAffine::to_canonical(const SymMatrix& x) const { return congruence(u_inv.transpose(), x); }

SymMatrix CanonicalAffine::from_canonical(const SymMatrix& y) const { return congruence(u.transpose(), y); }

CanonicalAffine canonical_affine_reduce(const AffineParams& p) {
  validate(p);
  const int d = p.dim();
  const SymMatrix ata(p.a.transpose() * p.a);
  // s = theta_s I^r theta_s^T; v = theta_s^{-T} maps s to I^r.
  const ExtendedCholesky ec = extended_cholesky(p.alpha_bar + ata);
  const int r = ec.rank;
  const Matrix theta_s = ec.unpermuted_augmented();
  const Matrix theta_s_inv = theta_s.partialPivLu().inverse();
  const Matrix s2 = theta_s_inv * ata.dense() * theta_s_inv.transpose();

  Matrix o = Matrix::Identity(d, d);
  Vector eta = Vector::Zero(d);
  if (r > 0) {
    const Matrix block = 0.5 * (s2.topLeftCorner(r, r) + s2.topLeftCorner(r, r).transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(block);
    if (es.info() != Eigen::Success) throw Error(Errc::EigenFailure, "eigensolver failed in canonical reduction");
    for (int i = 0; i < r; ++i) {
      eta(i) = es.eigenvalues()(r - 1 - i);
      o.col(i).head(r) = es.eigenvectors().col(r - 1 - i);
    }
  }
  int n = 0;
  while (n < r && eta(n) > 1e-10) ++n;

  Vector scale = Vector::Ones(d);
  for (int i = 0; i < n; ++i) scale(i) = std::sqrt(eta(i));
  CanonicalAffine ca;
  ca.d = d;
  ca.n = n;
  ca.u = scale.asDiagonal() * o.transpose() * theta_s.transpose();
  ca.u_inv = theta_s_inv.transpose() * o * scale.cwiseInverse().asDiagonal();
  ca.delta_bar = (ca.u_inv.transpose() * p.alpha_bar.dense() * ca.u_inv).diagonal().cwiseMax(0.0);
  ca.delta_min = 0.0;
  if (n > 0) ca.delta_min = ca.delta_bar.head(n).minCoeff();
  const double tol = 1e-8 * (1.0 + ca.delta_bar.cwiseAbs().maxCoeff());
  if (n > 0 && ca.delta_min < d - 1 - tol)
    throw Error(Errc::ExistenceViolated, "reduced degree delta_min is below d - 1");
  ca.B_u = p.B.conjugated(ca.u);
  return ca;
}

// ---------------------------------------------------------------------------
// Affine ODE

AffineOdeFlow::AffineOdeFlow(const LinearMap& b, const SymMatrix& drift_const, double t) : d_(b.dim()) {
  check_time(t);
  if (drift_const.dim() != d_) throw Error(Errc::IncompatibleDims, "ODE drift constant has the wrong size");
  identity_ = t == 0.0 || (b.is_zero() && drift_const.dense().isZero(0.0));
  if (identity_) return;
  if (b.is_wishart()) {
    wishart_ = true;
    e_ = matrix_exp(t * b.wishart_b());
    shift_ = gram_integral_sym(b.wishart_b(), drift_const, t);
    return;
  }
  // Constant drift as an extra coordinate: z' = [[M, c], [0, 0]] z, z = (x, 1).
  const int p = packed_size(d_);
  Matrix aug = Matrix::Zero(p + 1, p + 1);
  aug.topLeftCorner(p, p) = b.coefficients();
  aug.topRightCorner(p, 1) = drift_const.packed();
  e_ = matrix_exp(t * aug);
}

SymMatrix AffineOdeFlow::apply(const SymMatrix& x) const {
  if (identity_) return x;
  if (x.dim() != d_) throw Error(Errc::IncompatibleDims, "ODE flow applied to a matrix of the wrong size");
  if (wishart_) return congruence(e_, x) + shift_;
  const int p = packed_size(d_);
  const Vector z = e_.topLeftCorner(p, p) * x.packed() + e_.topRightCorner(p, 1);
  return SymMatrix::from_packed(d_, z);
}

SymMatrix affine_ode_step(const SymMatrix& x, const SymMatrix& drift_const, const LinearMap& b, double t) {
  return AffineOdeFlow(b, drift_const, t).apply(x);
}

// ---------------------------------------------------------------------------
// Scheme configuration

int scheme_order(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::order2:
    case SchemeKind::order2bis:
      return 2;
    case SchemeKind::order3:
      return 3;
    case SchemeKind::euler:
      return 1;
    case SchemeKind::exact:
      break;
  }
  return 0;
}

GaussMode effective_gauss_mode(const SchemeSpec& spec) {
  if (spec.gauss_mode) return *spec.gauss_mode;
  return spec.kind == SchemeKind::order3 ? GaussMode::match5 : GaussMode::match3;
}

void validate(const SchemeSpec& spec) {
  if (!(spec.epsilon_perturb >= 0.0) || !std::isfinite(spec.epsilon_perturb))
    throw Error(Errc::ConfigError, "epsilon_perturb must be finite and >= 0");
  if (spec.epsilon_perturb > 0.0 && scheme_order(spec.kind) < 2)
    throw Error(Errc::ConfigError, "epsilon_perturb applies to the order 2 and 3 schemes only");
  if (spec.kind == SchemeKind::order3 && effective_gauss_mode(spec) != GaussMode::match5)
    throw Error(Errc::ConfigError, "the third order scheme needs gauss_mode = match5");
}

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::exact:
      return "exact";
    case SchemeKind::order2:
      return "order2";
    case SchemeKind::order2bis:
      return "order2bis";
    case SchemeKind::order3:
      return "order3";
    case SchemeKind::euler:
      return "euler";
  }
  return "unknown";
}

SchemeKind scheme_kind_from_string(const std::string& s) {
  for (SchemeKind k : {SchemeKind::exact, SchemeKind::order2, SchemeKind::order2bis, SchemeKind::order3,
                       SchemeKind::euler})
    if (to_string(k) == s) return k;
  throw Error(Errc::ConfigError, "unknown scheme kind '" + s + "'");
}

std::string to_string(Composition c) {
  switch (c) {
    case Composition::sequential:
      return "sequential";
    case Composition::strang_half:
      return "strang_half";
    case Composition::bernoulli_random:
      return "bernoulli_random";
  }
  return "unknown";
}

Composition composition_from_string(const std::string& s) {
  for (Composition c : {Composition::sequential, Composition::strang_half, Composition::bernoulli_random})
    if (to_string(c) == s) return c;
  throw Error(Errc::ConfigError, "unknown composition '" + s + "'");
}

// ---------------------------------------------------------------------------
// Elementary schemes and composition

SymMatrix l1_scheme_step(RngStream& rng, const SymMatrix& x, double alpha, double t, int nu, CirMode cir_mode) {
  if (nu != 2 && nu != 3) throw Error(Errc::UnsupportedParams, "l1 scheme order must be 2 or 3");
  check_time(t);
  if (alpha < x.dim() - 1) throw Error(Errc::InvalidAlpha, "alpha must be >= d - 1");
  if (t == 0.0) return x;
  Matrix m = x.dense();
  l_step_inplace(rng, m, 0, alpha, t, scheme_draws(nu, nu == 2 ? GaussMode::match3 : GaussMode::match5, cir_mode));
  return finish_psd(m);
}

SymMatrix canonical_scheme_step(RngStream& rng, const CanonicalWishartParams& p, double t, int nu,
                                CirMode cir_mode) {
  if (nu != 2 && nu != 3) throw Error(Errc::UnsupportedParams, "canonical scheme order must be 2 or 3");
  check_time(t);
  if (p.alpha < p.dim() - 1) throw Error(Errc::InvalidAlpha, "alpha must be >= d - 1");
  if (p.n < 0 || p.n > p.dim()) throw Error(Errc::IncompatibleDims, "n must lie in [0, d]");
  if (t == 0.0) return p.x;
  Matrix m = p.x.dense();
  canonical_inplace(rng, m, p.alpha, p.n, t,
                    scheme_draws(nu, nu == 2 ? GaussMode::match3 : GaussMode::match5, cir_mode));
  return finish_psd(m);
}

Stepper compose(std::vector<Stepper> steppers, Composition mode) {
  if (steppers.empty()) throw Error(Errc::UnsupportedParams, "nothing to compose");
  switch (mode) {
    case Composition::sequential:
      return [steppers = std::move(steppers)](RngStream& rng, const SymMatrix& x) {
        SymMatrix y = x;
        for (const Stepper& s : steppers) {
          SymMatrix next = s(rng, y);
          check_same_dim(y, next);
          y = std::move(next);
        }
        return y;
      };
    case Composition::strang_half:
      if (steppers.size() != 2) throw Error(Errc::UnsupportedParams, "strang composition takes two steppers");
      return strang(steppers[0], steppers[1]);
    case Composition::bernoulli_random:
      if (steppers.size() != 2) throw Error(Errc::UnsupportedParams, "random composition takes two steppers");
      return [first = steppers[0], second = steppers[1]](RngStream& rng, const SymMatrix& x) {
        const bool flip = rng.uniform() < 0.5;
        const Stepper& a = flip ? second : first;
        const Stepper& b = flip ? first : second;
        SymMatrix y = a(rng, x);
        check_same_dim(x, y);
        SymMatrix z = b(rng, y);
        check_same_dim(y, z);
        return z;
      };
  }
  throw Error(Errc::UnsupportedParams, "unknown composition");
}

Stepper strang(Stepper half, Stepper full) {
  return [half = std::move(half), full = std::move(full)](RngStream& rng, const SymMatrix& x) {
    SymMatrix y = half(rng, x);
    check_same_dim(x, y);
    SymMatrix z = full(rng, y);
    check_same_dim(y, z);
    SymMatrix w = half(rng, z);
    check_same_dim(z, w);
    return w;
  };
}

// ---------------------------------------------------------------------------
// Wishart schemes

CanonicalReduction scheme_reduction(const WishartParams& p, double t, bool force) {
  validate(p);
  check_time(t);
  if (t == 0.0) throw Error(Errc::NegativeTime, "the reduction needs t > 0");
  const int d = p.dim();
  const SymMatrix ata(p.a.transpose() * p.a);
  const ExtendedCholesky ec = extended_cholesky(ata);
  if (ec.rank == d) return exact_reduction(p, t);

  const Matrix comm = p.b * ata.dense() - ata.dense() * p.b;
  if (comm.norm() > 1e-10 * (1.0 + p.b.norm() * ata.norm())) {
    if (!force)
      throw Error(Errc::UnsupportedParams,
                  "order 3 needs a invertible or b commuting with a^T a; use order2 or pass --force");
    return exact_reduction(p, t);
  }
  const SymMatrix g = (1.0 / t) * gram_integral(p.b, Matrix::Identity(d, d), t);
  CanonicalReduction red;
  red.n = ec.rank;
  red.m_t = matrix_exp(t * p.b);
  red.theta = psd_positive_part(g).sqrt * ec.unpermuted_augmented();
  red.theta_inv = red.theta.partialPivLu().inverse();
  return red;
}

Stepper wishart_stepper(const WishartParams& p, double t, const SchemeSpec& spec) {
  validate(p);
  validate(spec);
  check_time(t);
  if (t == 0.0) return [](RngStream&, const SymMatrix& x) { return x; };
  switch (spec.kind) {
    case SchemeKind::exact: {
      auto sampler = std::make_shared<ExactSampler>(p, t);
      return [sampler](RngStream& rng, const SymMatrix& x) { return sampler->step(rng, x); };
    }
    case SchemeKind::order3: {
      auto red = std::make_shared<CanonicalReduction>(scheme_reduction(p, t, spec.force));
      const L1Draws draws = scheme_draws(3, effective_gauss_mode(spec), spec.cir_mode);
      const double alpha = p.alpha;
      const double eps = spec.epsilon_perturb;
      return [red, draws, alpha, t, eps](RngStream& rng, const SymMatrix& x) {
        Matrix y = red->to_canonical(perturbed(x, eps, t, 3)).dense();
        canonical_inplace(rng, y, alpha, red->n, t, draws);
        return finish_psd(red->theta * y * red->theta.transpose());
      };
    }
    case SchemeKind::order2:
    case SchemeKind::order2bis:
    case SchemeKind::euler:
      return affine_stepper(as_affine(p), t, spec);
  }
  throw Error(Errc::UnsupportedParams, "unknown scheme kind");
}

SymMatrix wishart_scheme_step(RngStream& rng, const WishartParams& p, double t, const SchemeSpec& spec) {
  return wishart_stepper(p, t, spec)(rng, p.x);
}

// ---------------------------------------------------------------------------
// Affine schemes

namespace {

// Wishart part of the second order splitting in canonical coordinates.
Stepper canonical_wishart_part(const CanonicalAffine& ca, double t, bool bis, const L1Draws& draws) {
  const int d = ca.d, n = ca.n;
  if (bis) {
    return [d, n, t](RngStream& rng, const SymMatrix& y) {
      // (c + sqrt(t) G I^n)^T (c + sqrt(t) G I^n) with c^T c = y.
      const ExtendedCholesky ec = extended_cholesky(y);
      Matrix c = Matrix::Zero(d, d);
      c.topRows(ec.rank) = ec.unpermuted_factor().transpose();
      const double sq = std::sqrt(t);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < n; ++j) c(i, j) += sq * moment_match_3(rng);
      return assume_symmetric(c.transpose() * c);
    };
  }
  const double alpha = ca.delta_min;
  return [alpha, n, t, draws](RngStream& rng, const SymMatrix& y) {
    Matrix m = y.dense();
    canonical_inplace(rng, m, alpha, n, t, draws);
    return assume_symmetric(std::move(m));
  };
}

SymMatrix ode_drift(const CanonicalAffine& ca, double beta) {
  Vector c = ca.delta_bar;
  for (int i = 0; i < ca.n; ++i) c(i) = std::max(c(i) - beta, 0.0);
  return assume_symmetric(Matrix(c.asDiagonal()));
}

Stepper flow_stepper(const CanonicalAffine& ca, double beta, double t) {
  auto flow = std::make_shared<AffineOdeFlow>(ca.B_u, ode_drift(ca, beta), t);
  return [flow](RngStream&, const SymMatrix& y) { return flow->apply(y); };
}

Stepper affine_split(const CanonicalAffine& ca, double t, bool bis, const SchemeSpec& spec) {
  const int d = ca.d;
  if (bis && ca.n > 0 && ca.delta_min < d - 1e-8 * (1.0 + ca.delta_min))
    throw Error(Errc::NeedsDegreeAtLeastD, "order2bis needs delta_bar - d I^n PSD (degree at least d)");
  const double beta = bis ? static_cast<double>(d) : ca.delta_min;
  const Stepper wishart_part = canonical_wishart_part(ca, t, bis, scheme_draws(2, effective_gauss_mode(spec), spec.cir_mode));
  Stepper inner;
  switch (spec.composition) {
    case Composition::strang_half:
      inner = strang(flow_stepper(ca, beta, t / 2), wishart_part);
      break;
    case Composition::sequential:
      inner = compose({wishart_part, flow_stepper(ca, beta, t)}, Composition::sequential);
      break;
    case Composition::bernoulli_random:
      inner = compose({wishart_part, flow_stepper(ca, beta, t)}, Composition::bernoulli_random);
      break;
  }
  auto reduced = std::make_shared<CanonicalAffine>(ca);
  const double eps = spec.epsilon_perturb;
  return [reduced, inner, eps, t](RngStream& rng, const SymMatrix& x) {
    const SymMatrix y = inner(rng, reduced->to_canonical(perturbed(x, eps, t, 2)));
    return finish_psd(reduced->from_canonical(y).dense());
  };
}

}  // namespace

Stepper affine_stepper(const AffineParams& p, double t, const SchemeSpec& spec) {
  validate(p);
  validate(spec);
  check_time(t);
  if (t == 0.0) return [](RngStream&, const SymMatrix& x) { return x; };
  switch (spec.kind) {
    case SchemeKind::euler: {
      auto params = std::make_shared<AffineParams>(p);
      return [params, t](RngStream& rng, const SymMatrix& x) { return corrected_euler_step(rng, *params, x, t); };
    }
    case SchemeKind::order2:
    case SchemeKind::order2bis:
      return affine_split(canonical_affine_reduce(p), t, spec.kind == SchemeKind::order2bis, spec);
    case SchemeKind::exact:
    case SchemeKind::order3:
      break;
  }
  throw Error(Errc::UnsupportedParams, "exact and order 3 samplers exist for the Wishart model only");
}

SymMatrix affine_scheme2_step(RngStream& rng, const CanonicalAffine& ca, const SymMatrix& x, double t,
                              CirMode cir_mode) {
  check_time(t);
  if (t == 0.0) return x;
  SchemeSpec spec;
  spec.kind = SchemeKind::order2;
  spec.cir_mode = cir_mode;
  return affine_split(ca, t, false, spec)(rng, x);
}

SymMatrix affine_scheme2bis_step(RngStream& rng, const CanonicalAffine& ca, const SymMatrix& x, double t) {
  check_time(t);
  SchemeSpec spec;
  spec.kind = SchemeKind::order2bis;
  // The degree precondition is checked even for t = 0.
  Stepper s = affine_split(ca, t > 0.0 ? t : 1.0, true, spec);
  if (t == 0.0) return x;
  return s(rng, x);
}

SymMatrix corrected_euler_step(RngStream& rng, const AffineParams& p, const SymMatrix& x, double t) {
  check_time(t);
  const int d = p.dim();
  if (x.dim() != d) throw Error(Errc::IncompatibleDims, "state has the wrong size");
  if (t == 0.0) return x;
  const Matrix root = psd_positive_part(x).sqrt;
  Matrix dw(d, d);
  const double sq = std::sqrt(t);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) dw(i, j) = sq * gauss(rng);
  const Matrix noise = root * dw * p.a;
  Matrix next = x.dense() + t * (p.alpha_bar + p.B.apply(x)).dense() + noise + noise.transpose();
  require_finite(next, "Euler step");
  return assume_symmetric(std::move(next));
}

// ---------------------------------------------------------------------------
// Gourieroux-Sufana

GourierouxStepper::GourierouxStepper(double rate, const WishartParams& p, double t, const SchemeSpec& spec)
    : rate_(rate), t_(t), euler_(spec.kind == SchemeKind::euler), wishart_(wishart_stepper(p, t, spec)) {
  if (!std::isfinite(rate)) throw Error(Errc::NonFinite, "interest rate must be finite");
}

Vector GourierouxStepper::asset_step(RngStream& rng, const Vector& s, const SymMatrix& x) const {
  const int d = x.dim();
  if (s.size() != d) throw Error(Errc::IncompatibleDims, "asset vector and covariance sizes differ");
  if (t_ == 0.0) return s;
  const ExtendedCholesky ec = extended_cholesky(x);
  const Matrix l = ec.unpermuted_factor();
  Vector g(ec.rank);
  for (int i = 0; i < ec.rank; ++i) g(i) = gauss(rng);
  const Vector shock = std::sqrt(t_) * (l * g);
  Vector out(d);
  for (int i = 0; i < d; ++i) out(i) = s(i) * std::exp((rate_ - 0.5 * x(i, i)) * t_ + shock(i));
  return out;
}

Vector GourierouxStepper::asset_euler_step(RngStream& rng, const Vector& s, const SymMatrix& x) const {
  const int d = x.dim();
  if (s.size() != d) throw Error(Errc::IncompatibleDims, "asset vector and covariance sizes differ");
  Vector db(d);
  for (int i = 0; i < d; ++i) db(i) = std::sqrt(t_) * gauss(rng);
  const Vector shock = psd_positive_part(x).sqrt * db;
  return s.cwiseProduct((Vector::Constant(d, 1.0 + rate_ * t_) + shock));
}

GourierouxState GourierouxStepper::step(RngStream& rng, const GourierouxState& state) const {
  if (t_ == 0.0) return state;
  GourierouxState out;
  if (euler_) {
    out.s = asset_euler_step(rng, state.s, state.x);
    out.x = wishart_(rng, state.x);
    return out;
  }
  if (rng.uniform() < 0.5) {
    out.s = asset_step(rng, state.s, state.x);
    out.x = wishart_(rng, state.x);
  } else {
    out.x = wishart_(rng, state.x);
    out.s = asset_step(rng, state.s, out.x);
  }
  return out;
}

GourierouxState gourieroux_sufana_step(RngStream& rng, const GourierouxState& state, double rate,
                                       const WishartParams& p, double t, const SchemeSpec& spec) {
  if ((state.s.array() <= 0.0).any()) throw Error(Errc::UnsupportedParams, "asset prices must be positive");
  return GourierouxStepper(rate, p, t, spec).step(rng, state);
}

}  // namespace wishart

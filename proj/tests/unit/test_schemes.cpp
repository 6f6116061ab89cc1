#include <doctest.h>

#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "wishart/errors.hpp"
#include "wishart/oracle.hpp"
#include "wishart/schemes.hpp"

using namespace wishart;

namespace {

double slope(const std::vector<double>& ts, const std::vector<double>& errs) {
  const int n = static_cast<int>(ts.size());
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += std::log(ts[i]) / n;
    my += std::log(errs[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (int i = 0; i < n; ++i) {
    sxy += (std::log(ts[i]) - mx) * (std::log(errs[i]) - my);
    sxx += (std::log(ts[i]) - mx) * (std::log(ts[i]) - mx);
  }
  return sxy / sxx;
}

// E[exp(-c u)] for u = t chi2(degree, x0 / t).
double cir_laplace(double degree, double x0, double t, double c) {
  const double den = 1.0 + 2.0 * c * t;
  return std::exp(-c * x0 / den) / std::pow(den, degree / 2.0);
}

// E[exp(-c Tr X)] after one L1 step from x. Only the first row and column
// move: Tr X = U11 + |u + sqrt(t) G|^2 + Tr(trailing), with G made of
// independent draws from `gauss_law` (empty for a true Gaussian).
double l1_expectation(const SymMatrix& x, double alpha, double t, double c, const std::vector<Atom>& gauss_law) {
  const int d = x.dim();
  const Matrix trailing = x.dense().bottomRightCorner(d - 1, d - 1);
  const Matrix l = trailing.llt().matrixL();
  const Vector u = l.triangularView<Eigen::Lower>().solve(Vector(x.dense().col(0).tail(d - 1)));
  const double u11 = x(0, 0) - u.squaredNorm();
  double value = std::exp(-c * trailing.trace()) * cir_laplace(alpha - (d - 1), u11, t, c);
  for (int i = 0; i < d - 1; ++i) {
    if (gauss_law.empty()) {
      value *= std::exp(-c * u(i) * u(i) / (1.0 + 2.0 * c * t)) / std::sqrt(1.0 + 2.0 * c * t);
    } else {
      double s = 0.0;
      for (const Atom& a : gauss_law) {
        const double z = u(i) + std::sqrt(t) * a.value;
        s += a.prob * std::exp(-c * z * z);
      }
      value *= s;
    }
  }
  return value;
}

WishartParams fig3_left() {
  return WishartParams{0.4 * SymMatrix::identity(3), 4.5, Matrix::Zero(3, 3), Matrix::Identity(3, 3)};
}

ComplexSymMatrix imag_v(double w, int d) { return {SymMatrix::zero(d), w * SymMatrix::identity(d)}; }

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::ConfigError;
}

}  // namespace

TEST_SUITE("schemes") {

TEST_CASE("Wishart linear map and its packed coefficients") {
  std::mt19937_64 gen(1);
  const Matrix b = testing::gaussian_matrix(gen, 3, 3);
  const LinearMap m = LinearMap::wishart(b);
  const SymMatrix y = testing::random_sym(gen, 3);
  const SymMatrix by = m.apply(y);
  CHECK((by.dense() - (b * y.dense() + y.dense() * b.transpose())).norm() < 1e-12);
  const LinearMap dense = LinearMap::dense(3, m.coefficients());
  CHECK((dense.apply(y).dense() - by.dense()).norm() < 1e-12);
  CHECK(LinearMap::zero(3).is_zero());
  CHECK(!m.is_zero());
}

TEST_CASE("conjugated linear map in both forms") {
  std::mt19937_64 gen(2);
  const Matrix b = testing::gaussian_matrix(gen, 3, 3);
  const Matrix u = testing::gaussian_matrix(gen, 3, 3) + 3.0 * Matrix::Identity(3, 3);
  const Matrix ui = u.inverse();
  const SymMatrix y = testing::random_sym(gen, 3);
  const LinearMap w = LinearMap::wishart(b);
  const Matrix expected = ui.transpose() * w.apply(congruence(u.transpose(), y)).dense() * ui;
  CHECK((w.conjugated(u).apply(y).dense() - expected).norm() < 1e-10);
  const LinearMap d = LinearMap::dense(3, w.coefficients());
  CHECK((d.conjugated(u).apply(y).dense() - expected).norm() < 1e-10);
}

TEST_CASE("drift condition spot-check") {
  std::mt19937_64 gen(3);
  CHECK(drift_condition_violations(LinearMap::wishart(testing::gaussian_matrix(gen, 3, 3)), 500, 4) == 0);
  // y -> -Tr(y) I pushes off the boundary of the cone.
  const int p = packed_size(3);
  Matrix coeffs = Matrix::Zero(p, p);
  const int diag[] = {0, 3, 5};
  for (int i : diag)
    for (int j : diag) coeffs(i, j) = -1.0;
  CHECK(drift_condition_violations(LinearMap::dense(3, coeffs), 500, 4) > 0);
}

TEST_CASE("canonical affine reduction") {
  SUBCASE("a = I, alpha_bar = alpha I") {
    const AffineParams p{SymMatrix::identity(3), 4.5 * SymMatrix::identity(3), LinearMap::zero(3), Matrix::Identity(3, 3)};
    const CanonicalAffine ca = canonical_affine_reduce(p);
    CHECK(ca.n == 3);
    CHECK(ca.delta_min == doctest::Approx(4.5));
    for (int i = 0; i < 3; ++i) CHECK(ca.delta_bar(i) == doctest::Approx(4.5));
    CHECK((ca.u.transpose() * ca.u - Matrix::Identity(3, 3)).norm() < 1e-12);
  }
  SUBCASE("Wishart form with an invertible a") {
    std::mt19937_64 gen(5);
    const Matrix a = testing::gaussian_matrix(gen, 3, 3) + 2.0 * Matrix::Identity(3, 3);
    const WishartParams w{SymMatrix::identity(3), 3.7, Matrix::Zero(3, 3), a};
    const CanonicalAffine ca = canonical_affine_reduce(as_affine(w));
    CHECK(ca.n == 3);
    const Matrix rebuilt = ca.u.transpose() * ca.delta_bar.asDiagonal() * ca.u;
    CHECK((rebuilt - 3.7 * a.transpose() * a).norm() < 1e-9 * (a.transpose() * a).norm());
    const Matrix ata = ca.u.transpose() * ca.u;
    CHECK((ata - a.transpose() * a).norm() < 1e-9 * ata.norm());
    CHECK((ca.u * ca.u_inv - Matrix::Identity(3, 3)).norm() < 1e-10);
  }
  SUBCASE("rank deficient a") {
    const WishartParams w{SymMatrix::identity(3), 2.5, Matrix::Zero(3, 3), SymMatrix::identity_n(3, 1).dense()};
    CHECK(canonical_affine_reduce(as_affine(w)).n == 1);
  }
  SUBCASE("existence violated") {
    const AffineParams p{SymMatrix::identity(3), 1.0 * SymMatrix::identity(3), LinearMap::zero(3), Matrix::Identity(3, 3)};
    CHECK(error_code([&] { validate(p); }) == Errc::ExistenceViolated);
  }
}

TEST_CASE("affine ODE flow closed forms") {
  std::mt19937_64 gen(6);
  const SymMatrix x = testing::random_psd(gen, 3, 3);
  const SymMatrix c = testing::random_psd(gen, 3, 3);
  const double t = 0.7;
  CHECK((affine_ode_step(x, c, LinearMap::zero(3), t).dense() - (x + t * c).dense()).norm() < 1e-12);

  const double beta = -0.6;
  const double g = std::exp(2.0 * beta * t);
  const SymMatrix expected = g * x + ((g - 1.0) / (2.0 * beta)) * c;
  const LinearMap wb = LinearMap::wishart(beta * Matrix::Identity(3, 3));
  CHECK((affine_ode_step(x, c, wb, t).dense() - expected.dense()).norm() < 1e-12);
  const LinearMap db = LinearMap::dense(3, wb.coefficients());
  CHECK((affine_ode_step(x, c, db, t).dense() - expected.dense()).norm() < 1e-12);
}

TEST_CASE("affine ODE flow satisfies the ODE") {
  std::mt19937_64 gen(7);
  const int p = packed_size(3);
  const LinearMap b = LinearMap::dense(3, 0.3 * testing::gaussian_matrix(gen, p, p));
  const SymMatrix x = testing::random_psd(gen, 3, 3);
  const SymMatrix c = testing::random_psd(gen, 3, 3);
  const double t = 0.5, h = 1e-6;
  const SymMatrix xt = affine_ode_step(x, c, b, t);
  const SymMatrix xth = affine_ode_step(x, c, b, t + h);
  const Matrix fd = (xth - xt).dense() / h;
  const Matrix rhs = (c + b.apply(xt)).dense();
  CHECK((fd - rhs).norm() < 1e-4 * (1.0 + rhs.norm()));
}

TEST_CASE("L1 scheme: small steps barely move the state") {
  std::mt19937_64 gen(8);
  const SymMatrix x = testing::random_psd(gen, 3, 3);
  const double t = 1e-8;
  for (int nu : {2, 3}) {
    for (int i = 0; i < 200; ++i) {
      RngStream s(9, i);
      const SymMatrix y = l1_scheme_step(s, x, 2.5, t, nu);
      CHECK((y - x).norm() <= 50.0 * std::sqrt(t) * (1.0 + x.norm()));
    }
  }
}

TEST_CASE("L1 scheme keeps the first moment exact") {
  std::mt19937_64 gen(10);
  const SymMatrix x = testing::random_psd(gen, 3, 3);
  const double alpha = 2.5, t = 0.3;
  for (int nu : {2, 3}) {
    for (CirMode cm : {CirMode::exact, CirMode::fast}) {
      testing::Moments m;
      for (int i = 0; i < 100000; ++i) {
        RngStream s(11, i);
        m.add(l1_scheme_step(s, x, alpha, t, nu, cm)(0, 0));
      }
      CHECK(std::abs(m.mean() - (x(0, 0) + alpha * t)) < 3.0 * m.se());
    }
  }
}

TEST_CASE("L1 scheme weak error against the exact step") {
  std::mt19937_64 gen(12);
  const SymMatrix x = testing::random_psd(gen, 3, 3);
  const double alpha = 2.5, c = 0.1;
  const std::vector<double> ts{0.4, 0.2, 0.1, 0.05};
  std::vector<double> e2, e3;
  for (double t : ts) {
    const double truth = l1_expectation(x, alpha, t, c, {});
    e2.push_back(std::abs(l1_expectation(x, alpha, t, c, moment_match_3_law()) - truth));
    e3.push_back(std::abs(l1_expectation(x, alpha, t, c, moment_match_5_law()) - truth));
  }
  CHECK(slope(ts, e2) >= 1.7);
  CHECK(slope(ts, e3) >= 2.5);

  // The enumeration above describes what l1_scheme_step does.
  const double t = 0.4;
  const auto f = exp_trace_functional({-c * SymMatrix::identity(3), SymMatrix::zero(3)});
  const McEstimate est =
      mc_estimate([&](RngStream& s) { return f(l1_scheme_step(s, x, alpha, t, 2)); }, 100000, McOptions{13, 1});
  CHECK(std::abs(est.mean.real() - l1_expectation(x, alpha, t, c, moment_match_3_law())) < 3.0 * est.se_re);
}

TEST_CASE("composition with the identity is pathwise neutral") {
  std::mt19937_64 gen(14);
  const SymMatrix x = testing::random_psd(gen, 3, 3);
  const Stepper s = [](RngStream& r, const SymMatrix& y) { return l1_scheme_step(r, y, 2.5, 0.2, 2); };
  const Stepper id = [](RngStream&, const SymMatrix& y) { return y; };
  const Stepper both = compose({s, id}, Composition::sequential);
  for (int i = 0; i < 50; ++i) {
    RngStream r1(15, i), r2(15, i);
    CHECK((both(r1, x).dense() - s(r2, x).dense()).norm() == 0.0);
  }
}

TEST_CASE("commuting L_k steps: both orders give the same law") {
  std::mt19937_64 gen(16);
  const SymMatrix x = testing::random_psd(gen, 3, 3);
  auto lk = [](int k) -> Stepper {
    return [k](RngStream& r, const SymMatrix& y) {
      Matrix m = y.dense();
      l_step_inplace(r, m, k, 2.5, 0.5, L1Draws{});
      return finish_psd(m);
    };
  };
  const Stepper ab = compose({lk(0), lk(1)}, Composition::sequential);
  const Stepper ba = compose({lk(1), lk(0)}, Composition::sequential);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      testing::Moments m1, m2;
      for (int p = 0; p < 50000; ++p) {
        RngStream r1(17, p), r2(18, p);
        m1.add(ab(r1, x)(i, j));
        m2.add(ba(r2, x)(i, j));
      }
      CHECK(std::abs(m1.mean() - m2.mean()) <= 3.0 * std::hypot(m1.se(), m2.se()));
    }
}

TEST_CASE("Strang composition of two linear flows is second order") {
  Matrix b1(2, 2), b2(2, 2);
  b1 << 0.3, 1.0, 0.0, -0.5;
  b2 << -0.2, 0.0, 0.8, 0.4;
  const SymMatrix x(Matrix::Identity(2, 2) + 0.3 * Matrix::Ones(2, 2));
  const SymMatrix zero = SymMatrix::zero(2);
  const std::vector<double> ts{0.4, 0.2, 0.1, 0.05};
  std::vector<double> errs;
  for (double t : ts) {
    const auto half = std::make_shared<AffineOdeFlow>(LinearMap::wishart(b1), zero, t / 2);
    const auto full = std::make_shared<AffineOdeFlow>(LinearMap::wishart(b2), zero, t);
    const Stepper st = strang([half](RngStream&, const SymMatrix& y) { return half->apply(y); },
                              [full](RngStream&, const SymMatrix& y) { return full->apply(y); });
    RngStream r(1, 0);
    const Matrix e = matrix_exp(t * (b1 + b2));
    errs.push_back((st(r, x).dense() - e * x.dense() * e.transpose()).norm());
  }
  CHECK(slope(ts, errs) >= 2.5);
}

TEST_CASE("scheme specifications are validated") {
  SchemeSpec s;
  s.kind = SchemeKind::order3;
  s.gauss_mode = GaussMode::match3;
  CHECK(error_code([&] { validate(s); }) == Errc::ConfigError);
  SchemeSpec e;
  e.kind = SchemeKind::euler;
  e.epsilon_perturb = 0.1;
  CHECK(error_code([&] { validate(e); }) == Errc::ConfigError);
  CHECK(scheme_kind_from_string("order2bis") == SchemeKind::order2bis);
  CHECK(to_string(SchemeKind::order3) == "order3");
  CHECK(error_code([] { scheme_kind_from_string("order4"); }) == Errc::ConfigError);
  CHECK(effective_gauss_mode(SchemeSpec{SchemeKind::order2}) == GaussMode::match3);
  CHECK(effective_gauss_mode(SchemeSpec{SchemeKind::order3}) == GaussMode::match5);
}

TEST_CASE("second order bis needs degree at least d") {
  const WishartParams p{10.0 * SymMatrix::identity(3), 2.2, Matrix::Zero(3, 3), Matrix::Identity(3, 3)};
  CHECK(error_code([&] { wishart_stepper(p, 0.1, SchemeSpec{SchemeKind::order2bis}); }) ==
        Errc::NeedsDegreeAtLeastD);
  CHECK_NOTHROW(wishart_stepper(p, 0.1, SchemeSpec{SchemeKind::order2}));
}

TEST_CASE("third order needs invertible a or commuting b") {
  Matrix b(3, 3);
  b << 0.1, 0.5, 0.0, 0.0, -0.2, 0.3, 0.2, 0.0, 0.1;
  const WishartParams p{SymMatrix::identity(3), 2.5, b, SymMatrix::identity_n(3, 1).dense()};
  CHECK(error_code([&] { wishart_stepper(p, 0.1, SchemeSpec{SchemeKind::order3}); }) == Errc::UnsupportedParams);
  SchemeSpec forced{SchemeKind::order3};
  forced.force = true;
  CHECK_NOTHROW(wishart_stepper(p, 0.1, forced));
  // Commuting case: b diagonal and a^T a diagonal.
  const WishartParams q{SymMatrix::identity(3), 2.5, -0.3 * Matrix::Identity(3, 3), SymMatrix::identity_n(3, 1).dense()};
  const CanonicalReduction red = scheme_reduction(q, 0.1, false);
  CHECK(red.n == 1);
  const Matrix qt = gram_integral(q.b, q.a, 0.1).dense() / 0.1;
  const Matrix th = red.theta * SymMatrix::identity_n(3, 1).dense() * red.theta.transpose();
  CHECK((th - qt).norm() < 1e-12);
}

TEST_CASE("affine schemes keep the mean exact when B = 0") {
  std::mt19937_64 gen(19);
  const SymMatrix x = testing::random_psd(gen, 3, 3);
  const Matrix a = testing::gaussian_matrix(gen, 3, 3) + 2.0 * Matrix::Identity(3, 3);
  const WishartParams w{x, 3.6, Matrix::Zero(3, 3), a};
  const double t = 0.2;
  const Matrix expected = (x.dense() + 3.6 * t * a.transpose() * a);
  for (SchemeKind k : {SchemeKind::order2, SchemeKind::order2bis, SchemeKind::euler}) {
    const Stepper st = wishart_stepper(w, t, SchemeSpec{k});
    Matrix sum = Matrix::Zero(3, 3), sum2 = Matrix::Zero(3, 3);
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
      RngStream r(20, i);
      const Matrix y = st(r, x).dense();
      sum += y;
      sum2 += y.cwiseProduct(y);
    }
    const Matrix mean = sum / n;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double se = std::sqrt((sum2(i, j) / n - mean(i, j) * mean(i, j)) / n);
        CHECK_MESSAGE(std::abs(mean(i, j) - expected(i, j)) < 3.0 * se, to_string(k), " entry ", i, ",", j);
      }
  }
}

TEST_CASE("corrected Euler without noise is the Euler ODE step") {
  std::mt19937_64 gen(21);
  const SymMatrix x = testing::random_psd(gen, 3, 3);
  const SymMatrix ab = testing::random_psd(gen, 3, 3);
  const LinearMap b = LinearMap::wishart(0.2 * testing::gaussian_matrix(gen, 3, 3));
  const AffineParams p{x, ab, b, Matrix::Zero(3, 3)};
  RngStream r(22, 0);
  const SymMatrix y = corrected_euler_step(r, p, x, 0.1);
  CHECK((y.dense() - (x + 0.1 * (ab + b.apply(x))).dense()).norm() < 1e-12);
}

TEST_CASE("schemes converge to the closed form on a three-dimensional example") {
  const WishartParams p = fig3_left();
  const double horizon = 10.0;
  const int steps = 10;
  const ComplexSymMatrix v = imag_v(0.05, 3);
  const Complex truth = wishart_charfn(p, horizon, v);
  CHECK(truth.real() == doctest::Approx(0.054277).epsilon(1e-5));
  const auto f = exp_trace_functional(v);
  for (SchemeKind k : {SchemeKind::order2, SchemeKind::order2bis, SchemeKind::order3}) {
    const Stepper st = wishart_stepper(p, horizon / steps, SchemeSpec{k});
    const McEstimate est = mc_estimate(st, p.x, steps, f, 40000, McOptions{23, 1});
    CHECK_MESSAGE(std::abs(est.mean.real() - truth.real()) < 3.0 * est.se_re, to_string(k));
  }
}

TEST_CASE("affine order 2 on a non-Wishart drift converges to a fine reference") {
  // B(y) = b y + y b^T + Tr(y) c with c PSD satisfies the drift condition.
  const int d = 2;
  Matrix b(2, 2);
  b << -0.4, 0.1, 0.0, -0.3;
  Matrix coeffs = LinearMap::wishart(b).coefficients();
  const Matrix c = 0.05 * (Matrix::Identity(2, 2) + 0.5 * Matrix::Ones(2, 2));
  const Vector cp = SymMatrix(c).packed();
  for (int j : {0, 2}) coeffs.col(j) += cp;
  const LinearMap B = LinearMap::dense(d, coeffs);
  CHECK(drift_condition_violations(B, 500, 24) == 0);
  const AffineParams ap{SymMatrix(0.5 * Matrix::Identity(2, 2)), 2.5 * SymMatrix::identity(2), B,
                        Matrix::Identity(2, 2)};
  const auto f = exp_trace_functional({-0.5 * SymMatrix::identity(2), SymMatrix::zero(2)});
  const double horizon = 1.0;
  const McEstimate ref =
      mc_estimate(affine_stepper(ap, horizon / 64, SchemeSpec{SchemeKind::order2}), ap.x, 64, f, 40000, McOptions{25, 1});
  const McEstimate coarse =
      mc_estimate(affine_stepper(ap, horizon / 4, SchemeSpec{SchemeKind::order2}), ap.x, 4, f, 40000, McOptions{26, 1});
  CHECK(std::abs(ref.mean.real() - coarse.mean.real()) < 3.0 * std::hypot(ref.se_re, coarse.se_re));
}

TEST_CASE("Gourieroux-Sufana assets") {
  const double rate = 0.02;
  const WishartParams w{SymMatrix::identity(2), 4.5, 0.5 * Matrix::Identity(2, 2), 0.2 * Matrix::Identity(2, 2)};
  const GourierouxStepper st(rate, w, 0.5, SchemeSpec{SchemeKind::order2});
  RngStream r(27, 0);
  const Vector s0 = Vector::Constant(2, 100.0);
  const Vector grown = st.asset_step(r, s0, SymMatrix::zero(2));
  CHECK(grown(0) == doctest::Approx(100.0 * std::exp(rate * 0.5)).epsilon(1e-14));

  Matrix x(2, 2);
  x << 0.04, 0.02, 0.02, 0.04;
  const WishartParams params{SymMatrix(x), 4.5, 0.5 * Matrix::Identity(2, 2), 0.2 * Matrix::Identity(2, 2)};
  const GourierouxStepper one(rate, params, 1.0, SchemeSpec{SchemeKind::order2});
  testing::Moments m0, m1;
  for (int i = 0; i < 200000; ++i) {
    RngStream s(28, i);
    const GourierouxState out = one.step(s, GourierouxState{s0, params.x});
    m0.add(std::exp(-rate) * out.s(0));
    m1.add(std::exp(-rate) * out.s(1));
  }
  CHECK(std::abs(m0.mean() - 100.0) < 3.0 * m0.se());
  CHECK(std::abs(m1.mean() - 100.0) < 3.0 * m1.se());
}

}  // TEST_SUITE

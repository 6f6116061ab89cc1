#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "wishart/errors.hpp"
#include "wishart/randkit.hpp"

using namespace wishart;

namespace {

double law_moment(const std::vector<Atom>& law, int k) {
  double s = 0.0;
  for (const Atom& a : law) s += a.prob * std::pow(a.value, k);
  return s;
}

double law_expect_exp(const std::vector<Atom>& law, double lambda) {
  double s = 0.0;
  for (const Atom& a : law) s += a.prob * std::exp(-lambda * a.value);
  return s;
}

// E[exp(-lambda X)] for X = t chi2(degree, x0 / t).
double cir_laplace(const CirParams& p, double lambda) {
  const double den = 1.0 + 2.0 * lambda * p.t;
  return std::exp(-lambda * p.x0 / den) / std::pow(den, p.degree / 2.0);
}

double fitted_slope(const std::vector<double>& ts, const std::vector<double>& errs) {
  double mx = 0, my = 0;
  const int n = static_cast<int>(ts.size());
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

}  // namespace

TEST_SUITE("randkit") {

TEST_CASE("streams are deterministic and pinned") {
  RngStream r(42, 0);
  CHECK(gauss(r) == doctest::Approx(-0.68222603520752212).epsilon(1e-15));
  CHECK(gauss(r) == doctest::Approx(0.18057615488878895).epsilon(1e-15));
  CHECK(gauss(r) == doctest::Approx(0.0089155162399885655).epsilon(1e-13));
  RngStream raw(42, 0);
  CHECK(raw() == 11307114055752567099ULL);
  CHECK(raw() == 1350887118657991639ULL);
}

TEST_CASE("different streams and seeds give different sequences") {
  RngStream a(1, 0), b(1, 1), c(2, 0);
  const auto va = a(), vb = b(), vc = c();
  CHECK(va != vb);
  CHECK(va != vc);
  CHECK(vb != vc);
}

TEST_CASE("uniform lies in the open unit interval with the right mean") {
  RngStream r(5, 3);
  testing::Moments m;
  for (int i = 0; i < 200000; ++i) {
    const double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    m.add(u);
  }
  CHECK(std::abs(m.mean() - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / m.n));
}

TEST_CASE("gaussian mean and fourth moment") {
  RngStream r(123, 0);
  double s1 = 0.0, s4 = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double g = gauss(r);
    s1 += g;
    s4 += g * g * g * g;
  }
  CHECK(std::abs(s1 / n) <= 0.004);
  CHECK(std::abs(s4 / n - 3.0) <= 0.03);
}

TEST_CASE("three-point variable: atoms and moments") {
  const auto law = moment_match_3_law();
  double total = 0.0;
  for (const Atom& a : law) total += a.prob;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(law_moment(law, 1)) < 1e-12);
  CHECK(law_moment(law, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(law_moment(law, 3)) < 1e-12);
  CHECK(law_moment(law, 4) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(law_moment(law, 5)) < 1e-12);
  // The sixth moment is 9, not the Gaussian 15.
  CHECK(law_moment(law, 6) == doctest::Approx(9.0).epsilon(1e-12));

  RngStream r(8, 0);
  const double s3 = std::sqrt(3.0);
  for (int i = 0; i < 10000; ++i) {
    const double g = moment_match_3(r);
    const bool ok = g == 0.0 || g == s3 || g == -s3;
    REQUIRE(ok);
  }
}

TEST_CASE("four-point variable: moments up to order seven") {
  const auto law = moment_match_5_law();
  REQUIRE(law.size() == 4);
  double total = 0.0;
  for (const Atom& a : law) total += a.prob;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(law_moment(law, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(law_moment(law, 4) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(law_moment(law, 6) == doctest::Approx(15.0).epsilon(1e-12));
  for (int k : {1, 3, 5, 7}) CHECK(std::abs(law_moment(law, k)) < 1e-12);

  RngStream r(9, 0);
  std::set<double> seen;
  for (int i = 0; i < 10000; ++i) seen.insert(moment_match_5(r));
  CHECK(seen.size() == 4);
}

TEST_CASE("noncentral chi-square means") {
  RngStream r(21, 0);
  testing::Moments central, shifted;
  for (int i = 0; i < 1000000; ++i) {
    central.add(noncentral_chisq(r, 2.0, 0.0));
    shifted.add(noncentral_chisq(r, 3.0, 5.0));
  }
  CHECK(std::abs(central.mean() - 2.0) <= 0.006);
  CHECK(std::abs(shifted.mean() - 8.0) <= 0.017);
  CHECK(noncentral_chisq(r, 0.0, 0.0) == 0.0);
}

TEST_CASE("noncentral chi-square below one degree uses the Poisson mixture") {
  RngStream r(22, 0);
  testing::Moments m;
  for (int i = 0; i < 400000; ++i) m.add(noncentral_chisq(r, 0.2, 1.5));
  // variance 2 * 0.2 + 4 * 1.5
  CHECK(std::abs(m.mean() - 1.7) < 3.0 * std::sqrt(6.4 / m.n));
}

TEST_CASE("noncentral chi-square rejects negative parameters") {
  RngStream r(1, 0);
  CHECK_THROWS_AS(noncentral_chisq(r, -1.0, 0.0), Error);
  CHECK_THROWS_AS(noncentral_chisq(r, 1.0, -0.5), Error);
}

TEST_CASE("exact CIR step") {
  RngStream r(31, 0);
  testing::Moments m;
  const CirParams p{2.5, 0.0, 0.4};
  for (int i = 0; i < 400000; ++i) m.add(cir_step_exact(r, p));
  CHECK(std::abs(m.mean() - 2.5 * 0.4) < 3.0 * m.se());
  CHECK(cir_step_exact(r, CirParams{0.0, 0.0, 1.0}) == 0.0);

  // Laplace transform at v = -0.3 of a scalar Wishart.
  const CirParams q{1.7, 0.8, 0.6};
  testing::Moments lt;
  for (int i = 0; i < 400000; ++i) lt.add(std::exp(-0.3 * cir_step_exact(r, q)));
  CHECK(std::abs(lt.mean() - cir_laplace(q, 0.3)) < 3.0 * lt.se());
}

TEST_CASE("CIR parameters are validated") {
  RngStream r(1, 0);
  try {
    cir_step_exact(r, CirParams{1.0, -1.0, 1.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidDegree);
  }
  try {
    cir_step_order2(r, CirParams{1.0, 1.0, -1.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NegativeTime);
  }
}

TEST_CASE("order 2 CIR: zero start, exact mean, nonnegative") {
  RngStream r(41, 0);
  CHECK(cir_step_order2(r, CirParams{0.0, 0.0, 0.5}) == 0.0);
  const CirParams p{2.5, 1.0, 0.1};
  testing::Moments m;
  double lo = 1.0;
  for (int i = 0; i < 1000000; ++i) {
    const double u = cir_step_order2(r, p);
    lo = std::min(lo, u);
    m.add(u);
  }
  CHECK(lo >= 0.0);
  CHECK(std::abs(m.mean() - (1.0 + 2.5 * 0.1)) < 3.0 * m.se());
  // Below the threshold the discrete step is used; its first two moments are exact.
  const CirParams small{0.5, 0.2 * cir_order2_threshold(0.5, 0.3), 0.3};
  const auto law = cir_order2_law(small);
  const double mean = small.x0 + small.degree * small.t;
  const double var = 4.0 * small.x0 * small.t + 2.0 * small.degree * small.t * small.t;
  CHECK(law_moment(law, 1) == doctest::Approx(mean).epsilon(1e-12));
  CHECK(law_moment(law, 2) == doctest::Approx(var + mean * mean).epsilon(1e-12));
  for (const Atom& a : law) CHECK(a.value >= 0.0);
}

TEST_CASE("order 3 CIR law matches the exact moments") {
  const CirParams p{1.3, 0.7, 0.2};
  const auto law = cir_order3_law(p);
  REQUIRE(law.size() == 4);
  // Raw moments of t chi2(degree, x0 / t) from the cumulants.
  std::vector<double> kappa(6, 0.0), mu(6, 0.0);
  double fact = 1.0;
  for (int n = 1; n <= 5; ++n) {
    if (n > 1) fact *= (n - 1);
    kappa[n] = std::pow(2.0, n - 1) * fact * (p.degree * std::pow(p.t, n) + n * p.x0 * std::pow(p.t, n - 1));
  }
  mu[0] = 1.0;
  for (int n = 1; n <= 5; ++n) {
    double s = 0.0;
    double binom = 1.0;
    for (int k = 0; k < n; ++k) {
      s += binom * kappa[n - k] * mu[k];
      binom = binom * (n - 1 - k) / (k + 1);
    }
    mu[n] = s;
  }
  for (int n = 1; n <= 5; ++n) CHECK(law_moment(law, n) == doctest::Approx(mu[n]).epsilon(1e-9));
  for (const Atom& a : law) CHECK(a.value >= 0.0);
}

TEST_CASE("weak order of the CIR schemes on exp(-u/2)") {
  const std::vector<double> ts{0.2, 0.1, 0.05};
  std::vector<double> e2, e3;
  for (double t : ts) {
    const CirParams p{2.5, 1.0, t};
    const double truth = cir_laplace(p, 0.5);
    e2.push_back(std::abs(law_expect_exp(cir_order2_law(p), 0.5) - truth));
    e3.push_back(std::abs(law_expect_exp(cir_order3_law(p), 0.5) - truth));
  }
  CHECK(fitted_slope(ts, e2) >= 2.5);
  CHECK(fitted_slope(ts, e3) >= 3.3);
}

TEST_CASE("sampling a finite law by inverse transform") {
  const std::vector<Atom> law{{-1.0, 0.25}, {2.0, 0.75}};
  RngStream r(77, 0);
  testing::Moments m;
  for (int i = 0; i < 200000; ++i) m.add(sample_atoms(r, law));
  CHECK(std::abs(m.mean() - 1.25) < 3.0 * m.se());
}

}  // TEST_SUITE

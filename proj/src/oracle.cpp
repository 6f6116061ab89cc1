#include "wishart/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace wishart {

Complex wishart_charfn(const WishartParams& p, double t, const ComplexSymMatrix& v) {
  validate(p);
  if (!(t >= 0.0)) throw Error(Errc::NegativeTime, "charfn time must be >= 0");
  if (v.dim() != p.dim()) throw Error(Errc::IncompatibleDims, "v has the wrong size");
  if (!laplace_domain_check(p, t, v.re)) throw Error(Errc::OutsideDomain, "real part of v outside the Laplace domain");
  const SymMatrix q = gram_integral(p.b, p.a, t);
  return complex_charfn_kernel(v, q, matrix_exp(t * p.b), p.x, p.alpha);
}

Complex wishart_charfn_canonical(const WishartParams& p, double t, const ComplexSymMatrix& v) {
  const CanonicalReduction red = exact_reduction(p, t);
  const ComplexSymMatrix w{congruence(red.theta.transpose(), v.re), congruence(red.theta.transpose(), v.im)};
  const int d = p.dim();
  // Canonical law: b = 0, a = I^n, so q_t = t I^n and m_t = I.
  return complex_charfn_kernel(w, t * SymMatrix::identity_n(d, red.n), Matrix::Identity(d, d),
                               red.to_canonical(p.x), p.alpha);
}

namespace {

double domain_margin(const WishartParams& p, double s, const SymMatrix& v) {
  const int d = p.dim();
  if (s == 0.0) return 1.0;
  const Matrix root = psd_positive_part(gram_integral(p.b, p.a, s)).sqrt;
  return min_eigenvalue(assume_symmetric(Matrix::Identity(d, d) - 2.0 * root * v.dense() * root));
}

bool interval_ok(const WishartParams& p, const SymMatrix& v, double s0, double f0, double s1, double f1, int depth) {
  if (f0 <= 0.0 || f1 <= 0.0) return false;
  // Eigenvalues move monotonically, so an interval whose endpoint values are
  // far from zero relative to their spread cannot hide a crossing.
  if (std::min(f0, f1) > std::abs(f1 - f0) || depth >= 12) return true;
  const double sm = 0.5 * (s0 + s1);
  const double fm = domain_margin(p, sm, v);
  return interval_ok(p, v, s0, f0, sm, fm, depth + 1) && interval_ok(p, v, sm, fm, s1, f1, depth + 1);
}

}  // namespace

bool laplace_domain_check(const WishartParams& p, double t, const SymMatrix& v_real) {
  if (v_real.dim() != p.dim()) throw Error(Errc::IncompatibleDims, "v has the wrong size");
  if (t <= 0.0) return true;
  constexpr int kIntervals = 8;
  double prev_s = 0.0, prev_f = 1.0;
  for (int i = 1; i <= kIntervals; ++i) {
    const double s = t * i / kIntervals;
    const double f = domain_margin(p, s, v_real);
    if (!interval_ok(p, v_real, prev_s, prev_f, s, f, 0)) return false;
    prev_s = s;
    prev_f = f;
  }
  return true;
}

SymMatrix wishart_mean(const WishartParams& p, double t) {
  validate(p);
  if (!(t >= 0.0)) throw Error(Errc::NegativeTime, "time must be >= 0");
  return congruence(matrix_exp(t * p.b), p.x) + p.alpha * gram_integral(p.b, p.a, t);
}

// ---------------------------------------------------------------------------
// Monte-Carlo

double McEstimate::std_error() const { return std::hypot(se_re, se_im); }

int hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

namespace {

struct Moments {
  std::int64_t n = 0;
  double mean_re = 0.0, mean_im = 0.0;
  double m2_re = 0.0, m2_im = 0.0;

  void add(Complex z) {
    ++n;
    const double dr = z.real() - mean_re, di = z.imag() - mean_im;
    mean_re += dr / n;
    mean_im += di / n;
    m2_re += dr * (z.real() - mean_re);
    m2_im += di * (z.imag() - mean_im);
  }

  // Chan et al. pairwise update.
  void merge(const Moments& o) {
    if (o.n == 0) return;
    const std::int64_t total = n + o.n;
    const double dr = o.mean_re - mean_re, di = o.mean_im - mean_im;
    const double w = static_cast<double>(n) * o.n / total;
    m2_re += o.m2_re + dr * dr * w;
    m2_im += o.m2_im + di * di * w;
    mean_re += dr * o.n / total;
    mean_im += di * o.n / total;
    n = total;
  }
};

}  // namespace

McEstimate mc_estimate(const PathFunctional& path_value, std::int64_t n_paths, const McOptions& opts) {
  if (n_paths < 2) throw Error(Errc::ConfigError, "Monte-Carlo needs at least two paths");
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t chunk = std::max<std::int64_t>(1, opts.chunk);
  const std::int64_t n_chunks = (n_paths + chunk - 1) / chunk;
  std::vector<Moments> parts(n_chunks);
  std::vector<std::exception_ptr> failures(n_chunks);
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&]() {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= n_chunks || stop.load()) return;
      try {
        Moments m;
        const std::int64_t end = std::min(n_paths, (c + 1) * chunk);
        for (std::int64_t i = c * chunk; i < end; ++i) {
          RngStream rng(opts.seed, static_cast<std::uint64_t>(i));
          const Complex z = path_value(rng);
          if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw Error(Errc::NonFinite, "path " + std::to_string(i) + " produced a non-finite value");
          m.add(z);
        }
        parts[c] = m;
      } catch (...) {
        failures[c] = std::current_exception();
        stop.store(true);
      }
    }
  };

  const int threads =
      static_cast<int>(std::min<std::int64_t>(opts.threads > 0 ? opts.threads : hardware_threads(), n_chunks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : failures)
    if (e) std::rethrow_exception(e);

  Moments total;
  for (const Moments& m : parts) total.merge(m);
  McEstimate est;
  est.n = total.n;
  est.mean = Complex(total.mean_re, total.mean_im);
  const double nn = static_cast<double>(total.n);
  est.se_re = std::sqrt(total.m2_re / (nn - 1.0) / nn);
  est.se_im = std::sqrt(total.m2_im / (nn - 1.0) / nn);
  est.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return est;
}

McEstimate mc_estimate(const Stepper& stepper, const SymMatrix& x0, int n_steps,
                       const std::function<Complex(const SymMatrix&)>& f, std::int64_t n_paths,
                       const McOptions& opts) {
  if (n_steps < 1) throw Error(Errc::ConfigError, "number of steps must be positive");
  return mc_estimate(
      [&](RngStream& rng) {
        SymMatrix x = x0;
        for (int k = 0; k < n_steps; ++k) x = stepper(rng, x);
        return f(x);
      },
      n_paths, opts);
}

std::function<Complex(const SymMatrix&)> exp_trace_functional(const ComplexSymMatrix& v) {
  return [v](const SymMatrix& x) {
    // Tr(v X) = sum_ij v_ij X_ij for symmetric v.
    const double re = v.re.dense().cwiseProduct(x.dense()).sum();
    const double im = v.im.dense().cwiseProduct(x.dense()).sum();
    return std::exp(Complex(re, im));
  };
}

// ---------------------------------------------------------------------------
// Convergence

void fit_slope(ConvergenceReport& report) {
  std::vector<double> lx, ly;
  for (const ConvergencePoint& pt : report.points) {
    if (!pt.above_noise) continue;
    lx.push_back(std::log(static_cast<double>(pt.n_steps)));
    ly.push_back(std::log(std::abs(pt.error)));
  }
  report.used_points = static_cast<int>(lx.size());
  report.fitted = lx.size() >= 3;
  if (!report.fitted) return;
  const double k = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double beta = sxy / sxx;
  double rss = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    const double res = ly[i] - my - beta * (lx[i] - mx);
    rss += res * res;
  }
  const double se = std::sqrt(rss / (k - 2.0) / sxx);
  // error ~ C N^{-slope}
  report.slope = -beta;
  report.slope_ci = {report.slope - 2.0 * se, report.slope + 2.0 * se};
}

ConvergenceReport run_convergence(const SchemeFamily& family, Complex truth, Component component,
                                  const std::vector<int>& n_grid, std::int64_t n_paths, const McOptions& opts) {
  if (n_grid.empty()) throw Error(Errc::ConfigError, "N grid is empty");
  for (size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw Error(Errc::ConfigError, "N grid must be strictly increasing");
  ConvergenceReport report;
  for (int n : n_grid) {
    ConvergencePoint pt;
    pt.n_steps = n;
    pt.estimate = mc_estimate(family(n), n_paths, opts);
    const Complex diff = pt.estimate.mean - truth;
    pt.error = component == Component::re ? diff.real() : diff.imag();
    pt.se = component == Component::re ? pt.estimate.se_re : pt.estimate.se_im;
    pt.above_noise = std::abs(pt.error) > 2.0 * pt.se;
    report.points.push_back(pt);
  }
  fit_slope(report);
  return report;
}

ConvergenceReport convergence_study(const SchemeFamily& family, Complex truth, Component component,
                                    const std::vector<int>& n_grid, std::int64_t n_paths, const McOptions& opts) {
  ConvergenceReport report = run_convergence(family, truth, component, n_grid, n_paths, opts);
  if (!report.fitted)
    throw Error(Errc::InsufficientSignal, "fewer than three grid points have an error above the noise level");
  return report;
}

ConvergenceReport pathwise_max_trace_study(const SchemeSpec& spec, const WishartParams& p, double horizon,
                                           const std::vector<int>& n_grid, std::int64_t n_paths,
                                           const McOptions& opts) {
  validate(p);
  if (!(horizon > 0.0)) throw Error(Errc::NegativeTime, "horizon must be positive");
  SchemeSpec exact_spec;
  exact_spec.kind = SchemeKind::exact;
  SchemeFamily family = [&](int n) -> PathFunctional {
    const double dt = horizon / n;
    Stepper scheme = wishart_stepper(p, dt, spec);
    Stepper exact = wishart_stepper(p, dt, exact_spec);
    auto max_trace = [n, x0 = p.x](const Stepper& s, RngStream& rng) {
      SymMatrix x = x0;
      double best = x.trace();
      for (int k = 0; k < n; ++k) {
        x = s(rng, x);
        best = std::max(best, x.trace());
      }
      return best;
    };
    return [scheme, exact, max_trace](RngStream& rng) {
      RngStream twin = rng;
      const double a = max_trace(scheme, rng);
      const double b = max_trace(exact, twin);
      return Complex(a, a - b);
    };
  };
  return run_convergence(family, Complex(0.0, 0.0), Component::im, n_grid, n_paths, opts);
}

}  // namespace wishart

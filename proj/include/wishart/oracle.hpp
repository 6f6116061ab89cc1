#pragma once

// Closed-form references and Monte-Carlo statistics.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "wishart/matkernel.hpp"
#include "wishart/randkit.hpp"
#include "wishart/schemes.hpp"
#include "wishart/wishart_exact.hpp"

namespace wishart {

/// E[exp(Tr(v X_t))] for X ~ WIS_d(x, alpha, b, a). With v = i w this is the
/// characteristic function at w.
Complex wishart_charfn(const WishartParams& p, double t, const ComplexSymMatrix& v);

/// Same value through the canonical law: theta WIS(theta^{-1} m x m^T theta^{-T},
/// alpha, 0, I^n; t) theta^T, i.e. the canonical transform at theta^T v theta.
Complex wishart_charfn_canonical(const WishartParams& p, double t, const ComplexSymMatrix& v);

/// True when I - 2 sqrt(q_s) v sqrt(q_s) is positive definite along [0, t].
/// Starts from eight intervals and bisects the ones where the smallest
/// eigenvalue could cross zero, down to depth 12.
bool laplace_domain_check(const WishartParams& p, double t, const SymMatrix& v_real);

/// E[X_t] = m_t x m_t^T + alpha q_t.
SymMatrix wishart_mean(const WishartParams& p, double t);

// ---------------------------------------------------------------------------
// Monte-Carlo

struct McOptions {
  std::uint64_t seed = 1;
  /// 0 means hardware concurrency.
  int threads = 0;
  /// Paths per work unit. Statistics are merged chunk by chunk in index
  /// order, so the result does not depend on the thread count.
  std::int64_t chunk = 4096;
};

struct McEstimate {
  Complex mean;
  double se_re = 0.0;
  double se_im = 0.0;
  std::int64_t n = 0;
  double elapsed = 0.0;

  double std_error() const;
};

/// Value of the functional on one simulated path. Path i is simulated with
/// RngStream(seed, i).
using PathFunctional = std::function<Complex(RngStream&)>;

McEstimate mc_estimate(const PathFunctional& path_value, std::int64_t n_paths, const McOptions& opts);

/// n_steps applications of stepper from x0, then f on the terminal value.
McEstimate mc_estimate(const Stepper& stepper, const SymMatrix& x0, int n_steps,
                       const std::function<Complex(const SymMatrix&)>& f, std::int64_t n_paths,
                       const McOptions& opts);

/// exp(Tr(v X)) for complex symmetric v.
std::function<Complex(const SymMatrix&)> exp_trace_functional(const ComplexSymMatrix& v);

int hardware_threads();

// ---------------------------------------------------------------------------
// Convergence

enum class Component { re, im };

struct ConvergencePoint {
  int n_steps = 0;
  McEstimate estimate;
  double error = 0.0;  // chosen component of (estimate - truth)
  double se = 0.0;     // standard error of that component
  bool above_noise = false;
};

struct ConvergenceReport {
  std::vector<ConvergencePoint> points;
  bool fitted = false;
  /// Least-squares slope of log|error| against log N over above-noise points.
  double slope = 0.0;
  std::pair<double, double> slope_ci{0.0, 0.0};
  int used_points = 0;
};

/// Builds the path functional for a grid with N steps.
using SchemeFamily = std::function<PathFunctional(int n_steps)>;

/// Runs every N and fits when at least three points are above noise; never
/// throws InsufficientSignal.
ConvergenceReport run_convergence(const SchemeFamily& family, Complex truth, Component component,
                                  const std::vector<int>& n_grid, std::int64_t n_paths, const McOptions& opts);

/// As run_convergence but raises InsufficientSignal when the fit is impossible.
ConvergenceReport convergence_study(const SchemeFamily& family, Complex truth, Component component,
                                    const std::vector<int>& n_grid, std::int64_t n_paths, const McOptions& opts);

/// Fits the slope in place.
void fit_slope(ConvergenceReport& report);

/// E[max_k Tr X_{t_k}] for the scheme (real part of each estimate) and its
/// difference with the exact multi-step scheme on the same grid and the same
/// path streams (imaginary part). Errors and the slope refer to the difference.
ConvergenceReport pathwise_max_trace_study(const SchemeSpec& spec, const WishartParams& p, double horizon,
                                           const std::vector<int>& n_grid, std::int64_t n_paths,
                                           const McOptions& opts);

}  // namespace wishart

#pragma once

// Discretization schemes for Wishart and affine processes on PSD matrices,
// built by composing the elementary L_k steps with the affine ODE flow.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wishart/matkernel.hpp"
#include "wishart/randkit.hpp"
#include "wishart/wishart_exact.hpp"

namespace wishart {

// ---------------------------------------------------------------------------
// Linear maps on symmetric matrices

/// Linear map B on S_d. The Wishart drift y -> b y + y b^T is kept in that
/// form; anything else is a dense matrix acting on packed coordinates.
class LinearMap {
 public:
  LinearMap() = default;
  static LinearMap zero(int d);
  static LinearMap wishart(const Matrix& b);
  /// coeffs is packed_size(d) x packed_size(d): packed(B(y)) = coeffs * packed(y).
  static LinearMap dense(int d, const Matrix& coeffs);

  int dim() const { return d_; }
  bool is_wishart() const { return !dense_; }
  bool is_zero() const;
  const Matrix& wishart_b() const { return b_; }

  SymMatrix apply(const SymMatrix& y) const;
  /// Coefficient matrix on packed coordinates (built for the Wishart form).
  Matrix coefficients() const;
  /// y -> u^{-T} B(u^T y u) u^{-1}.
  LinearMap conjugated(const Matrix& u) const;

 private:
  int d_ = 0;
  bool dense_ = false;
  Matrix b_;       // Wishart form
  Matrix coeffs_;  // dense form
};

/// Randomized spot-check of Tr(B(x1) x2) >= 0 over PSD pairs with
/// Tr(x1 x2) = 0. Returns the number of violating pairs.
int drift_condition_violations(const LinearMap& b, int trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Affine processes

/// AFF_d(x, alpha_bar, B, a).
struct AffineParams {
  SymMatrix x;
  SymMatrix alpha_bar;
  LinearMap B;
  Matrix a;

  int dim() const { return x.dim(); }
};

/// Dimensions, PSD-ness and alpha_bar - (d - 1) a^T a PSD.
void validate(const AffineParams& p);

/// WIS_d(x, alpha, b, a) as AFF_d(x, alpha a^T a, y -> b y + y b^T, a).
AffineParams as_affine(const WishartParams& p);

/// Canonical form: alpha_bar = u^T delta_bar u, a^T a = u^T I^n u, and
/// Y = u^{-T} X u^{-1} is AFF_d(., delta_bar, B_u, I^n).
struct CanonicalAffine {
  int d = 0;
  int n = 0;
  Vector delta_bar;
  LinearMap B_u;
  Matrix u;
  Matrix u_inv;
  double delta_min = 0.0;

  SymMatrix to_canonical(const SymMatrix& x) const;
  SymMatrix from_canonical(const SymMatrix& y) const;
};

CanonicalAffine canonical_affine_reduce(const AffineParams& p);

/// Exact flow of x' = c + B(x) over a fixed time t, prepared once.
class AffineOdeFlow {
 public:
  AffineOdeFlow() = default;
  AffineOdeFlow(const LinearMap& b, const SymMatrix& drift_const, double t);

  SymMatrix apply(const SymMatrix& x) const;

 private:
  int d_ = 0;
  bool identity_ = true;
  bool wishart_ = false;
  Matrix e_;          // exp(t b) in the Wishart form, exp(t [[M, c], [0, 0]]) otherwise
  SymMatrix shift_;   // integral term in the Wishart form
};

SymMatrix affine_ode_step(const SymMatrix& x, const SymMatrix& drift_const, const LinearMap& b, double t);

// ---------------------------------------------------------------------------
// Scheme configuration

enum class SchemeKind { exact, order2, order2bis, order3, euler };
enum class CirMode { exact, fast };
enum class GaussMode { gaussian, match3, match5 };
enum class Composition { sequential, strang_half, bernoulli_random };

struct SchemeSpec {
  SchemeKind kind = SchemeKind::exact;
  CirMode cir_mode = CirMode::exact;
  /// Defaults to match3 for second order and match5 for third order.
  std::optional<GaussMode> gauss_mode;
  Composition composition = Composition::strang_half;
  double epsilon_perturb = 0.0;
  /// Runs order 3 outside the supported parameter class.
  bool force = false;
};

/// Weak order targeted by the scheme (1 for Euler; 0 for exact).
int scheme_order(SchemeKind kind);
GaussMode effective_gauss_mode(const SchemeSpec& spec);
void validate(const SchemeSpec& spec);

std::string to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& s);
std::string to_string(Composition c);
Composition composition_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Steppers

/// One time step of fixed size; the callable owns everything it precomputed.
using Stepper = std::function<SymMatrix(RngStream&, const SymMatrix&)>;

/// Potential nu-th order scheme for L_1 (nu = 2 or 3).
SymMatrix l1_scheme_step(RngStream& rng, const SymMatrix& x, double alpha, double t, int nu,
                         CirMode cir_mode = CirMode::exact);

/// Composition of the canonical L_k schemes for WIS_d(x, alpha, 0, I^n).
SymMatrix canonical_scheme_step(RngStream& rng, const CanonicalWishartParams& p, double t, int nu,
                                CirMode cir_mode = CirMode::exact);

/// sequential: s_k(t) o .. o s_1(t). strang_half (two steppers built for t/2
/// and t, see below): first(t/2), second(t), first(t/2). bernoulli_random: one
/// of the two orderings with probability 1/2.
Stepper compose(std::vector<Stepper> steppers, Composition mode);

/// Strang composition of a half-step stepper and a full-step stepper.
Stepper strang(Stepper half, Stepper full);

/// Scheme for WIS_d(x, alpha, b, a) with a fixed step t.
Stepper wishart_stepper(const WishartParams& p, double t, const SchemeSpec& spec);
SymMatrix wishart_scheme_step(RngStream& rng, const WishartParams& p, double t, const SchemeSpec& spec);

/// theta_t for the third order scheme. Full rank a: Cholesky of q_t / t.
/// Singular a: requires b a^T a = a^T a b.
CanonicalReduction scheme_reduction(const WishartParams& p, double t, bool force);

/// Second order affine schemes (order2 or order2bis) and the corrected Euler
/// scheme with a fixed step t.
Stepper affine_stepper(const AffineParams& p, double t, const SchemeSpec& spec);

SymMatrix affine_scheme2_step(RngStream& rng, const CanonicalAffine& ca, const SymMatrix& x, double t,
                              CirMode cir_mode = CirMode::exact);
SymMatrix affine_scheme2bis_step(RngStream& rng, const CanonicalAffine& ca, const SymMatrix& x, double t);
/// X + (alpha_bar + B(X)) t + sqrt(X+) dW a + a^T dW^T sqrt(X+). Not PSD in general.
SymMatrix corrected_euler_step(RngStream& rng, const AffineParams& p, const SymMatrix& x, double t);

// ---------------------------------------------------------------------------
// Gourieroux-Sufana model: dS = diag(S) (r dt + sqrt(X) dB), X Wishart.

struct GourierouxState {
  Vector s;
  SymMatrix x;
};

/// Second order (and higher) schemes compose the exact asset step and the
/// covariance scheme in a random order; the Euler scheme moves both at once.
class GourierouxStepper {
 public:
  GourierouxStepper(double rate, const WishartParams& p, double t, const SchemeSpec& spec);

  GourierouxState step(RngStream& rng, const GourierouxState& state) const;
  /// Exact log-normal asset step with frozen covariance x.
  Vector asset_step(RngStream& rng, const Vector& s, const SymMatrix& x) const;
  /// S (1 + r t + sqrt(x+) dB), used together with the Euler covariance step.
  Vector asset_euler_step(RngStream& rng, const Vector& s, const SymMatrix& x) const;

 private:
  double rate_;
  double t_;
  bool euler_;
  Stepper wishart_;
};

GourierouxState gourieroux_sufana_step(RngStream& rng, const GourierouxState& state, double rate,
                                       const WishartParams& p, double t, const SchemeSpec& spec);

}  // namespace wishart

#pragma once

// Exact sampling of Wishart marginals. The generator of WIS_d(x, alpha, 0, I^n)
// splits into n commuting pieces L_1..L_n; each piece acts on one row/column of
// the matrix and has an explicit solution driven by a CIR process and a few
// Brownian motions.

#include "wishart/matkernel.hpp"
#include "wishart/randkit.hpp"

namespace wishart {

/// WIS_d(x, alpha, b, a).
struct WishartParams {
  SymMatrix x;
  double alpha = 0.0;
  Matrix b;
  Matrix a;

  int dim() const { return x.dim(); }
};

/// Checks dimensions, alpha >= d - 1 and that x is PSD.
void validate(const WishartParams& p);

/// WIS_d(x, alpha, 0, I^n).
struct CanonicalWishartParams {
  SymMatrix x;
  double alpha = 0.0;
  int n = 0;

  int dim() const { return x.dim(); }
};

void validate(const CanonicalWishartParams& p);

/// How the elementary L_k step draws its randomness. The exact step uses
/// Gaussian increments and the exact CIR marginal; the discretization schemes
/// swap either for a moment-matching substitute.
enum class GaussDraw { gaussian, match3, match5 };
enum class CirDraw { exact, order2, order3 };

struct L1Draws {
  GaussDraw gauss = GaussDraw::gaussian;
  CirDraw cir = CirDraw::exact;
};

/// Tolerance on min eigenvalues (relative to 1 + |X|_F) below which a sampler
/// output is reported as not PSD rather than clipped.
inline constexpr double kPsdTol = 1e-9;

/// Applies the time-t step of L_{k+1} (zero-based coordinate k) in place.
/// x must be symmetric; the result is symmetric but not clipped.
void l_step_inplace(RngStream& rng, Matrix& x, int k, double alpha, double t, const L1Draws& draws);

/// Symmetrizes, checks the min eigenvalue against kPsdTol and clips the
/// negative part away.
SymMatrix finish_psd(const Matrix& m);

/// Exact sample of the law generated by L_1 at time t.
SymMatrix l1_exact_step(RngStream& rng, const SymMatrix& x, double alpha, double t);

/// Exact sample of WIS_d(x, alpha, 0, I^n; t): L_1 .. L_n applied in turn
/// (L_n .. L_1 with reverse_order, which has the same law).
SymMatrix canonical_exact_step(RngStream& rng, const CanonicalWishartParams& p, double t, bool reverse_order = false);

/// Central Wishart from the Bartlett decomposition: t [L 0; 0 0][L 0; 0 0]^T
/// with L n x n lower triangular.
SymMatrix bartlett_sample(RngStream& rng, int d, int n, double alpha, double t);

/// Reduction of WIS_d(x, alpha, b, a; t) to the canonical law:
/// X = theta Y theta^T with Y ~ WIS_d(theta^{-1} m_t x m_t^T theta^{-T}, alpha, 0, I^n; t)
/// and q_t / t = theta I^n theta^T.
struct CanonicalReduction {
  int n = 0;
  Matrix m_t;
  Matrix theta;
  Matrix theta_inv;

  SymMatrix to_canonical(const SymMatrix& x) const;
  SymMatrix from_canonical(const SymMatrix& y) const;
};

/// theta from the extended Cholesky factorization of q_t / t.
CanonicalReduction exact_reduction(const WishartParams& p, double t);

/// General exact sampler with the reduction prepared once for a fixed step t.
class ExactSampler {
 public:
  ExactSampler(const WishartParams& p, double t);

  SymMatrix step(RngStream& rng, const SymMatrix& x) const;
  const CanonicalReduction& reduction() const { return red_; }

 private:
  double alpha_;
  double t_;
  CanonicalReduction red_;
};

SymMatrix general_exact_step(RngStream& rng, const WishartParams& p, double t);

}  // namespace wishart

#pragma once

// Dense linear algebra on symmetric positive semidefinite matrices: the
// rank-revealing (extended) Cholesky factorization, the matrix exponential,
// the Gram integral q_t and the positive-part projection.

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wishart/errors.hpp"

namespace wishart {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Real symmetric d x d matrix. The two triangles are kept identical: every
/// constructor symmetrizes and rejects non-finite input.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix zero(int d);
  static SymMatrix identity(int d);
  /// Diagonal matrix diag(1,..,1,0,..,0) with n leading ones.
  static SymMatrix identity_n(int d, int n);
  /// Builds from the d(d+1)/2 upper-triangle coordinates x_{i,j}, i <= j,
  /// stored row by row.
  static SymMatrix from_packed(int d, const Vector& packed);

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  void set(int i, int j, double value);

  const Matrix& dense() const { return m_; }
  Vector packed() const;
  double trace() const { return m_.trace(); }
  double norm() const { return m_.norm(); }

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

 private:
  struct Trusted {};
  SymMatrix(Matrix m, Trusted) : m_(std::move(m)) {}
  friend SymMatrix congruence(const Matrix& g, const SymMatrix& x);
  friend SymMatrix assume_symmetric(Matrix m);

  Matrix m_;
};

/// g x g^T, symmetrized.
SymMatrix congruence(const Matrix& g, const SymMatrix& x);
/// Wraps a matrix that is symmetric up to rounding (only the average of the
/// two triangles is kept). No finiteness check; for hot loops.
SymMatrix assume_symmetric(Matrix m);

inline int packed_size(int d) { return d * (d + 1) / 2; }

/// Real and imaginary parts of a complex symmetric matrix v = v_R + i v_I.
struct ComplexSymMatrix {
  SymMatrix re;
  SymMatrix im;

  int dim() const { return re.dim(); }
  CMatrix dense() const;
};

/// p q p^T = c c^T with c = [[c_r, 0], [k_r, 0]], c_r lower triangular with a
/// strictly positive diagonal. The permutation is stored as an index vector:
/// position i of the permuted matrix holds original coordinate perm[i].
struct ExtendedCholesky {
  int rank = 0;
  Matrix c_r;               // rank x rank
  Matrix k_r;               // (d - rank) x rank
  std::vector<int> perm;    // size d

  int dim() const { return static_cast<int>(perm.size()); }
  /// The d x rank factor [[c_r], [k_r]].
  Matrix factor() const;
  /// The invertible d x d matrix [[c_r, 0], [k_r, I]].
  Matrix augmented() const;
  /// p^T [[c_r, 0], [k_r, I]]; satisfies q = theta I^r theta^T.
  Matrix unpermuted_augmented() const;
  /// L = p^T [[c_r], [k_r]], so that q = L L^T.
  Matrix unpermuted_factor() const;
  bool identity_permutation() const;
};

inline constexpr double kDefaultPivotTol = 1e-12;

/// Rank-revealing Cholesky factorization. Tries the plain factorization
/// first, so a definite input gets the identity permutation; otherwise uses
/// greedy largest-diagonal pivoting and stops at the first pivot below
/// pivot_tol * max(1, max diagonal).
ExtendedCholesky extended_cholesky(const SymMatrix& q, double pivot_tol = kDefaultPivotTol);

/// exp(m) by scaling and squaring with the degree 13 Pade approximant.
Matrix matrix_exp(const Matrix& m);

/// q_t = int_0^t exp(s b) S exp(s b^T) ds for symmetric S, via the
/// exponential of the 2d x 2d block matrix [[-b, S], [0, b^T]].
SymMatrix gram_integral_sym(const Matrix& b, const SymMatrix& s, double t);
/// q_t = int_0^t exp(s b) a^T a exp(s b^T) ds.
SymMatrix gram_integral(const Matrix& b, const Matrix& a, double t);

struct PositivePart {
  SymMatrix positive;  // o diag(max(lambda, 0)) o^T
  Matrix sqrt;         // o diag(sqrt(max(lambda, 0))) o^T
};

PositivePart psd_positive_part(const SymMatrix& x);
double min_eigenvalue(const SymMatrix& x);

/// E[exp(Tr(v X_t))] for X_t Wishart given q_t, m_t = exp(t b), the initial
/// value and the degree. The power det(I - 2 q_t v)^(alpha/2) is continued
/// along lambda -> I - 2 lambda q_t v, lambda in [0, 1].
Complex complex_charfn_kernel(const ComplexSymMatrix& v, const SymMatrix& q_t, const Matrix& m_t,
                              const SymMatrix& x, double alpha);

void require_finite(const Matrix& m, const char* what);

}  // namespace wishart

#include "wishart/matkernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wishart {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(Errc::NonFinite, std::string(what) + " has non-finite entries");
}

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(Errc::IncompatibleDims, "symmetric matrix must be square");
  require_finite(m, "symmetric matrix");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::zero(int d) { return SymMatrix(Matrix::Zero(d, d), Trusted{}); }

SymMatrix SymMatrix::identity(int d) { return SymMatrix(Matrix::Identity(d, d), Trusted{}); }

SymMatrix SymMatrix::identity_n(int d, int n) {
  Matrix m = Matrix::Zero(d, d);
  for (int i = 0; i < std::min(n, d); ++i) m(i, i) = 1.0;
  return SymMatrix(std::move(m), Trusted{});
}

SymMatrix SymMatrix::from_packed(int d, const Vector& packed) {
  if (packed.size() != packed_size(d)) throw Error(Errc::IncompatibleDims, "packed vector has wrong length");
  Matrix m(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      m(i, j) = packed(k);
      m(j, i) = packed(k);
      ++k;
    }
  require_finite(m, "packed matrix");
  return SymMatrix(std::move(m), Trusted{});
}

void SymMatrix::set(int i, int j, double value) {
  m_(i, j) = value;
  m_(j, i) = value;
}

Vector SymMatrix::packed() const {
  const int d = dim();
  Vector out(packed_size(d));
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) out(k++) = m_(i, j);
  return out;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  m_ += o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  m_ -= o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

SymMatrix congruence(const Matrix& g, const SymMatrix& x) {
  Matrix r = g * x.dense() * g.transpose();
  return SymMatrix(0.5 * (r + r.transpose()), SymMatrix::Trusted{});
}

SymMatrix assume_symmetric(Matrix m) {
  Matrix r = 0.5 * (m + m.transpose());
  return SymMatrix(std::move(r), SymMatrix::Trusted{});
}

CMatrix ComplexSymMatrix::dense() const {
  CMatrix out(dim(), dim());
  out.real() = re.dense();
  out.imag() = im.dense();
  return out;
}

// ---------------------------------------------------------------------------
// Extended Cholesky

Matrix ExtendedCholesky::factor() const {
  const int d = dim();
  Matrix c = Matrix::Zero(d, rank);
  c.topRows(rank) = c_r;
  c.bottomRows(d - rank) = k_r;
  return c;
}

Matrix ExtendedCholesky::augmented() const {
  const int d = dim();
  Matrix c = Matrix::Zero(d, d);
  c.topLeftCorner(rank, rank) = c_r;
  c.bottomLeftCorner(d - rank, rank) = k_r;
  c.bottomRightCorner(d - rank, d - rank).setIdentity();
  return c;
}

Matrix ExtendedCholesky::unpermuted_augmented() const {
  const Matrix c = augmented();
  Matrix out(dim(), dim());
  for (int i = 0; i < dim(); ++i) out.row(perm[i]) = c.row(i);
  return out;
}

Matrix ExtendedCholesky::unpermuted_factor() const {
  const Matrix c = factor();
  Matrix out(dim(), rank);
  for (int i = 0; i < dim(); ++i) out.row(perm[i]) = c.row(i);
  return out;
}

bool ExtendedCholesky::identity_permutation() const {
  for (int i = 0; i < dim(); ++i)
    if (perm[i] != i) return false;
  return true;
}

namespace {

// Outer-product Cholesky, optionally with diagonal pivoting. Returns false
// (leaving out untouched) only when pivoting is disabled and a pivot falls
// below the threshold.
bool outer_product_cholesky(const Matrix& q, double threshold, bool pivoting, ExtendedCholesky& out) {
  const int d = static_cast<int>(q.rows());
  Matrix a = q;
  Matrix l = Matrix::Zero(d, d);
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);

  int rank = d;
  for (int k = 0; k < d; ++k) {
    int piv = k;
    if (pivoting) {
      for (int j = k + 1; j < d; ++j)
        if (a(j, j) > a(piv, piv)) piv = j;
    }
    const double pivot = a(piv, piv);
    if (!pivoting && pivot <= threshold) return false;
    if (pivot < -threshold) throw Error(Errc::NotPsd, "negative pivot in extended Cholesky");
    if (pivot <= threshold) {
      // Remaining Schur complement of a PSD matrix is bounded by its diagonal.
      const double bound = 1e3 * threshold;
      for (int i = k; i < d; ++i)
        for (int j = k; j < d; ++j)
          if (std::abs(a(i, j)) > bound) throw Error(Errc::NotPsd, "indefinite trailing block in extended Cholesky");
      rank = k;
      break;
    }
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      a.col(k).swap(a.col(piv));
      l.row(k).swap(l.row(piv));
      std::swap(perm[k], perm[piv]);
    }
    const double lkk = std::sqrt(pivot);
    l(k, k) = lkk;
    const int rest = d - k - 1;
    if (rest > 0) {
      l.col(k).tail(rest) = a.col(k).tail(rest) / lkk;
      a.bottomRightCorner(rest, rest).noalias() -= l.col(k).tail(rest) * l.col(k).tail(rest).transpose();
    }
  }
  out.rank = rank;
  out.c_r = l.topLeftCorner(rank, rank);
  out.k_r = l.bottomLeftCorner(d - rank, rank);
  out.perm = std::move(perm);
  return true;
}

}  // namespace

ExtendedCholesky extended_cholesky(const SymMatrix& q, double pivot_tol) {
  const Matrix& m = q.dense();
  const int d = q.dim();
  require_finite(m, "extended_cholesky input");
  double max_diag = 0.0;
  for (int i = 0; i < d; ++i) max_diag = std::max(max_diag, m(i, i));
  const double threshold = pivot_tol * std::max(1.0, max_diag);

  ExtendedCholesky out;
  if (d == 0) return out;
  // Rank is decided with pivoting: an unpivoted pass on a rank-deficient
  // input can leave rounding-level pivots well above the threshold.
  outer_product_cholesky(m, threshold, true, out);
  if (out.rank == d) outer_product_cholesky(m, threshold, false, out);
  return out;
}

// ---------------------------------------------------------------------------
// Matrix exponential

Matrix matrix_exp(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(Errc::IncompatibleDims, "matrix_exp needs a square matrix");
  require_finite(m, "matrix_exp input");
  const int n = static_cast<int>(m.rows());
  if (n == 0) return m;

  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix a = m / std::ldexp(1.0, squarings);

  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  Matrix tmp = b[13] * a6 + b[11] * a4 + b[9] * a2;
  Matrix u = a6 * tmp;
  u += b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  u = a * u;
  tmp = b[12] * a6 + b[10] * a4 + b[8] * a2;
  Matrix v = a6 * tmp;
  v += b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  require_finite(r, "matrix_exp result");
  return r;
}

SymMatrix gram_integral_sym(const Matrix& b, const SymMatrix& s, double t) {
  const int d = s.dim();
  if (b.rows() != d || b.cols() != d) throw Error(Errc::IncompatibleDims, "gram_integral: b must be d x d");
  if (t < 0.0) throw Error(Errc::NegativeTime, "gram_integral: negative time");
  require_finite(b, "gram_integral drift");
  if (t == 0.0) return SymMatrix::zero(d);

  Matrix block = Matrix::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d) = -b;
  block.topRightCorner(d, d) = s.dense();
  block.bottomRightCorner(d, d) = b.transpose();
  const Matrix e = matrix_exp(t * block);
  // The lower-right block is exp(t b^T); its transpose maps the upper-right
  // block int_0^t exp(-(t-s) b) S exp(s b^T) ds to q_t.
  Matrix q = e.bottomRightCorner(d, d).transpose() * e.topRightCorner(d, d);
  return SymMatrix(q);
}

SymMatrix gram_integral(const Matrix& b, const Matrix& a, double t) {
  if (a.rows() != a.cols()) throw Error(Errc::IncompatibleDims, "gram_integral: a must be square");
  require_finite(a, "gram_integral volatility");
  return gram_integral_sym(b, SymMatrix(a.transpose() * a), t);
}

// ---------------------------------------------------------------------------
// Positive part

PositivePart psd_positive_part(const SymMatrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(x.dense());
  if (es.info() != Eigen::Success) throw Error(Errc::EigenFailure, "symmetric eigensolver did not converge");
  const Vector lambda = es.eigenvalues().cwiseMax(0.0);
  const Matrix& o = es.eigenvectors();
  PositivePart out;
  out.positive = assume_symmetric(o * lambda.asDiagonal() * o.transpose());
  out.sqrt = o * lambda.cwiseSqrt().asDiagonal() * o.transpose();
  out.sqrt = 0.5 * (out.sqrt + out.sqrt.transpose()).eval();
  return out;
}

double min_eigenvalue(const SymMatrix& x) {
  if (x.dim() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(x.dense(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(Errc::EigenFailure, "symmetric eigensolver did not converge");
  return es.eigenvalues()(0);
}

// ---------------------------------------------------------------------------
// Characteristic function kernel

Complex complex_charfn_kernel(const ComplexSymMatrix& v, const SymMatrix& q_t, const Matrix& m_t,
                              const SymMatrix& x, double alpha) {
  const int d = x.dim();
  if (v.dim() != d || q_t.dim() != d || m_t.rows() != d || m_t.cols() != d || v.im.dim() != d)
    throw Error(Errc::IncompatibleDims, "charfn kernel: inconsistent dimensions");
  require_finite(m_t, "charfn kernel m_t");

  // Convergence domain: I - 2 sqrt(q) v_R sqrt(q) must be positive definite.
  const Matrix root = psd_positive_part(q_t).sqrt;
  const SymMatrix centered = assume_symmetric(Matrix::Identity(d, d) - 2.0 * root * v.re.dense() * root);
  if (min_eigenvalue(centered) <= 0.0) throw Error(Errc::OutsideDomain, "real part of v outside the Laplace domain");

  const CMatrix vc = v.dense();
  const CMatrix qv = q_t.dense().cast<Complex>() * vc;
  const CMatrix lhs = CMatrix::Identity(d, d) - 2.0 * qv;
  Eigen::PartialPivLU<CMatrix> lu(lhs);
  if (!(lu.rcond() > 1e-14)) throw Error(Errc::SingularSolve, "I - 2 q_t v is numerically singular");
  const CMatrix mxm = (m_t * x.dense() * m_t.transpose()).cast<Complex>();
  const Complex exponent = (vc * lu.solve(mxm)).trace();

  // Each factor 1 - 2 lambda mu_i moves on a segment that avoids 0 inside the
  // domain, so its continued logarithm is the principal one at lambda = 1.
  Complex log_det(0.0, 0.0);
  if (d > 0) {
    Eigen::ComplexEigenSolver<CMatrix> ces(2.0 * qv, false);
    if (ces.info() != Eigen::Success) throw Error(Errc::EigenFailure, "complex eigensolver did not converge");
    for (int i = 0; i < d; ++i) log_det += std::log(Complex(1.0, 0.0) - ces.eigenvalues()(i));
  }
  return std::exp(exponent - 0.5 * alpha * log_det);
}

}  // namespace wishart

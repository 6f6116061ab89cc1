#pragma once

#include <cmath>
#include <random>

#include "wishart/matkernel.hpp"

namespace testing {

inline wishart::Matrix gaussian_matrix(std::mt19937_64& gen, int rows, int cols) {
  std::normal_distribution<double> n01;
  wishart::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n01(gen);
  return m;
}

/// m m^T with m d x rank.
inline wishart::SymMatrix random_psd(std::mt19937_64& gen, int d, int rank) {
  const wishart::Matrix m = gaussian_matrix(gen, d, rank);
  return wishart::SymMatrix(m * m.transpose());
}

inline wishart::SymMatrix random_sym(std::mt19937_64& gen, int d) {
  const wishart::Matrix m = gaussian_matrix(gen, d, d);
  return wishart::SymMatrix(0.5 * (m + m.transpose()));
}

/// Eigenvalues computed from a clipped reconstruction may come back at
/// -1e-16 |X|; anything below that scale is a real failure.
inline bool psd_up_to_rounding(const wishart::SymMatrix& x) {
  return wishart::min_eigenvalue(x) >= -1e-13 * (1.0 + x.norm());
}

struct Moments {
  double sum = 0.0;
  double sum2 = 0.0;
  long n = 0;

  void add(double v) {
    sum += v;
    sum2 += v * v;
    ++n;
  }
  double mean() const { return sum / n; }
  double se() const {
    const double m = mean();
    return std::sqrt(std::max(sum2 / n - m * m, 0.0) / n);
  }
};

}  // namespace testing

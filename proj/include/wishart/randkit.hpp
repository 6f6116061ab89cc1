#pragma once

// Random variates for the Wishart samplers. Every Monte-Carlo path owns an
// RngStream keyed by (seed, stream_id), so results do not depend on how paths
// are distributed over threads.

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace wishart {

/// Philox4x32-10 counter-based generator. The 64-bit seed is the key and the
/// stream id occupies the upper half of the 128-bit counter.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  /// Uniform on the open interval (0, 1).
  double uniform();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  // Distribution objects live in the stream so that any internal caching
  // (the polar method keeps a spare normal) stays per stream.
  std::normal_distribution<double>& normal_dist() { return normal_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> out_{};
  int next_ = 4;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

double gauss(RngStream& rng);

/// Takes sqrt(3), -sqrt(3), 0 with probabilities 1/6, 1/6, 2/3. Matches the
/// standard normal moments up to order 5.
double moment_match_3(RngStream& rng);

/// Takes +-sqrt(3 + sqrt(6)) with probability (sqrt(6) - 2) / (4 sqrt(6))
/// each and +-sqrt(3 - sqrt(6)) otherwise. Matches normal moments up to 7.
double moment_match_5(RngStream& rng);

struct Atom {
  double value;
  double prob;
};

std::vector<Atom> moment_match_3_law();
std::vector<Atom> moment_match_5_law();

/// Exact chi-square with `degree` degrees of freedom and noncentrality
/// `noncentrality`. Degree above one uses (Z + sqrt(nc))^2 + chi2(degree - 1);
/// otherwise a Poisson(nc / 2) mixture of central chi-squares.
double noncentral_chisq(RngStream& rng, double degree, double noncentrality);

/// Squared-Bessel type CIR du = degree dt + 2 sqrt(u) dZ started at x0,
/// observed at time t.
struct CirParams {
  double degree = 0.0;
  double x0 = 0.0;
  double t = 0.0;
};

void validate(const CirParams& p);

/// Exact marginal: t * chi2(degree, x0 / t).
double cir_step_exact(RngStream& rng, const CirParams& p);
/// Potential second order scheme: Ninomiya-Victoir splitting with the
/// three-point variable away from zero, a two-point moment match of the first
/// two moments below the threshold K2(t).
double cir_step_order2(RngStream& rng, const CirParams& p);
/// Potential third order scheme: four-node Gauss quadrature of the exact
/// marginal, which matches its first seven moments and has nonnegative nodes.
double cir_step_order3(RngStream& rng, const CirParams& p);

/// Discrete one-step laws of the two schemes above, for exact expectations.
std::vector<Atom> cir_order2_law(const CirParams& p);
std::vector<Atom> cir_order3_law(const CirParams& p);

/// Threshold below which the order-2 scheme switches to the discrete step.
double cir_order2_threshold(double degree, double t);

/// Draws from a finite law by inverse transform.
double sample_atoms(RngStream& rng, const std::vector<Atom>& law);

}  // namespace wishart

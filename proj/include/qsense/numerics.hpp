#pragma once

// Special functions, finite-difference derivatives, quadrature helpers and
// the counter-based random streams used by every Monte Carlo trial.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>

namespace qsense::numerics {

inline constexpr double kPi = 3.14159265358979323846;

/// ln C(n, k). Throws DomainError unless 0 <= k <= n.
double log_binomial(std::int64_t n, std::int64_t k);

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// Bessel function of the first kind J_q(x), integer order.
///
/// Ascending series (extended precision) for |x| <= 12, Miller's backward
/// recurrence normalised by J_0 + 2 sum J_2k = 1 beyond that.
double bessel_j(int order, double x);

/// sin(x)/x with sinc(0) = 1.
double sinc(double x);

/// Default finite-difference step max(1e-4, 1e-4 |theta|).
double default_step(double theta);

/// Richardson-extrapolated central difference, (4 D(h) - D(2h)) / 3.
/// Samples are f(theta - 2h), f(theta - h), f(theta + h), f(theta + 2h).
double richardson_central(double fm2, double fm1, double fp1, double fp2, double h);

/// d f / d theta with O(h^4) error. Throws NumericalError on a non-finite
/// evaluation.
double numeric_derivative(const std::function<double(double)>& f, double theta,
                          std::optional<double> step = std::nullopt);

/// Adaptive Gauss-Kronrod on a finite interval.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double rel_tol = 1e-12);

/// Integral over (0, inf); integrable endpoint singularities at 0 allowed.
double integrate_positive_half_line(const std::function<double(double)>& f,
                                    double rel_tol = 1e-12);

/// Deterministic random stream keyed by (master_seed, stream_index).
///
/// Draw i of a stream is Philox4x32-10 applied to the 128-bit counter
/// (stream_index, i) under the key derived from master_seed, so any draw can
/// be replayed without generating its predecessors.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t stream_index);

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_; }
  std::uint64_t draws() const { return counter_; }

  /// Uniform on the open interval (0, 1), 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller on one counter block).
  double normal();
  /// Normal with the given mean and variance.
  double normal(double mean, double variance);
  /// Raw 64 random bits.
  std::uint64_t next_u64();

 private:
  std::array<std::uint32_t, 4> block();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

RandomStream derive_stream(std::uint64_t master_seed, std::uint64_t trial_index);

}  // namespace qsense::numerics

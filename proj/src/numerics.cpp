#include "qsense/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qsense/errors.hpp"

namespace qsense::numerics {

namespace {

constexpr int kMaxBesselOrder = 10000;
constexpr double kMaxBesselArgument = 1e5;
constexpr double kSeriesLimit = 12.0;
constexpr std::int64_t kDirectBinomialLimit = 1000;

// Ascending series for J_q(x), q >= 0, x >= 0, accumulated in long double.
double bessel_series(int q, double x) {
  if (x == 0.0) return q == 0 ? 1.0 : 0.0;
  const long double half = static_cast<long double>(x) / 2.0L;
  const long double log_first = q * std::log(half) - std::lgamma(static_cast<long double>(q) + 1.0L);
  long double term = std::exp(log_first);
  if (term == 0.0L) return 0.0;
  const long double half_sq = half * half;
  long double sum = term;
  for (int m = 0; m < 500; ++m) {
    term *= -half_sq / (static_cast<long double>(m + 1) * static_cast<long double>(m + 1 + q));
    sum += term;
    if (std::fabs(term) <= 1e-21L * std::fabs(sum) && (m + 1) > half) break;
  }
  return static_cast<double>(sum);
}

// Miller's backward recurrence, normalised with J_0 + 2 sum_{k>=1} J_2k = 1.
double bessel_miller(int q, double x) {
  const double scale_at = std::max(static_cast<double>(q), std::ceil(x));
  int start = static_cast<int>(scale_at) + 30 + static_cast<int>(std::sqrt(60.0 * scale_at));
  if (start % 2 != 0) ++start;
  const double two_over_x = 2.0 / x;

  double f_next = 0.0;  // f_{k+1}
  double f_cur = 1e-30; // f_k
  double wanted = (start == q) ? f_cur : 0.0;
  double norm = (start % 2 == 0) ? 2.0 * f_cur : 0.0;
  for (int k = start; k > 0; --k) {
    const double f_prev = k * two_over_x * f_cur - f_next;  // f_{k-1}
    f_next = f_cur;
    f_cur = f_prev;
    const int index = k - 1;
    if (index == q) wanted = f_cur;
    if (index == 0) {
      norm += f_cur;
    } else if (index % 2 == 0) {
      norm += 2.0 * f_cur;
    }
    if (std::fabs(f_cur) > 1e200) {
      f_cur *= 1e-200;
      f_next *= 1e-200;
      wanted *= 1e-200;
      norm *= 1e-200;
    }
  }
  return wanted / norm;
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_gamma: argument must be positive and finite");
  }
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double log_binomial(std::int64_t n, std::int64_t k) {
  if (n < 0 || k < 0 || k > n) {
    throw DomainError("log_binomial: need 0 <= k <= n, got n=" + std::to_string(n) +
                      " k=" + std::to_string(k));
  }
  const std::int64_t small = std::min(k, n - k);
  if (small <= kDirectBinomialLimit) {
    double acc = 0.0;
    for (std::int64_t i = 1; i <= small; ++i) {
      acc += std::log(static_cast<double>(n - small + i) / static_cast<double>(i));
    }
    return acc;
  }
  return log_gamma(static_cast<double>(n) + 1.0) - log_gamma(static_cast<double>(small) + 1.0) -
         log_gamma(static_cast<double>(n - small) + 1.0);
}

double bessel_j(int order, double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_j: non-finite argument");
  if (std::abs(order) > kMaxBesselOrder || std::fabs(x) > kMaxBesselArgument) {
    throw DomainError("bessel_j: order or argument outside supported range");
  }
  int q = std::abs(order);
  double sign = 1.0;
  if (order < 0 && (q % 2 != 0)) sign = -sign;
  if (x < 0.0 && (q % 2 != 0)) sign = -sign;
  const double ax = std::fabs(x);
  if (ax == 0.0) return q == 0 ? 1.0 : 0.0;

  // The series has no cancellation when its terms decrease from the start.
  const bool series = ax <= kSeriesLimit || (ax / 2.0) * (ax / 2.0) < q + 1.0;
  return sign * (series ? bessel_series(q, ax) : bessel_miller(q, ax));
}

double sinc(double x) {
  if (std::fabs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

double default_step(double theta) { return std::max(1e-4, 1e-4 * std::fabs(theta)); }

double richardson_central(double fm2, double fm1, double fp1, double fp2, double h) {
  const double d_h = (fp1 - fm1) / (2.0 * h);
  const double d_2h = (fp2 - fm2) / (4.0 * h);
  return (4.0 * d_h - d_2h) / 3.0;
}

double numeric_derivative(const std::function<double(double)>& f, double theta,
                          std::optional<double> step) {
  const double h = step.value_or(default_step(theta));
  if (!(h > 0.0)) throw DomainError("numeric_derivative: step must be positive");
  const double fm2 = f(theta - 2.0 * h);
  const double fm1 = f(theta - h);
  const double fp1 = f(theta + h);
  const double fp2 = f(theta + 2.0 * h);
  if (!std::isfinite(fm2) || !std::isfinite(fm1) || !std::isfinite(fp1) || !std::isfinite(fp2)) {
    throw NumericalError("numeric_derivative: non-finite function value near theta=" +
                         std::to_string(theta));
  }
  return richardson_central(fm2, fm1, fp1, fp2, h);
}

double integrate(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, 20, rel_tol, &error);
  if (!std::isfinite(value)) throw NumericalError("integrate: non-finite result");
  return value;
}

double integrate_positive_half_line(const std::function<double(double)>& f, double rel_tol) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const double value =
      integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), rel_tol);
  if (!std::isfinite(value)) throw NumericalError("integrate_positive_half_line: non-finite result");
  return value;
}

// ---------------------------------------------------------------------------
// Philox4x32-10

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

inline double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : seed_(master_seed), stream_(stream_index) {}

std::array<std::uint32_t, 4> RandomStream::block() {
  const std::uint64_t c = counter_++;
  return philox({static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                 static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

std::uint64_t RandomStream::next_u64() {
  const auto b = block();
  return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
}

double RandomStream::uniform() { return to_open_unit(next_u64()); }

double RandomStream::normal() {
  const auto b = block();
  const double u1 = to_open_unit((static_cast<std::uint64_t>(b[1]) << 32) | b[0]);
  const double u2 = to_open_unit((static_cast<std::uint64_t>(b[3]) << 32) | b[2]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double RandomStream::normal(double mean, double variance) {
  return mean + std::sqrt(variance) * normal();
}

RandomStream derive_stream(std::uint64_t master_seed, std::uint64_t trial_index) {
  return RandomStream(master_seed, trial_index);
}

}  // namespace qsense::numerics

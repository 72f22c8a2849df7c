#pragma once

// Measurement probability models p(outcome | phi) for the interferometric and
// homodyne protocols, each with its per-shot photon cost and a sampler.
//
// Outcome encoding (shared with serialized records):
//   NOON full     k in {0..N}      photons detected in port one
//   NOON parity   0 = even, 1 = odd  (parity class of N - k)
//   Mach-Zehnder  0 = even, 1 = odd
//   Holland-Burnett  q in {-j..j}  half the output photon-number difference
//   squeezed vacuum  y > 0         sum of pooled squared quadratures

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qsense/numerics.hpp"

namespace qsense::models {

enum class Protocol {
  NoonFull,
  NoonParity,
  MachZehnder,
  HollandBurnettBessel,
  HollandBurnettExact,
  SqueezedVacuum,
};

std::string_view protocol_name(Protocol protocol);
/// Inverse of protocol_name; throws DomainError for unknown names.
Protocol parse_protocol(std::string_view name);

struct NoonParams {
  int photons = 1;
};

enum class HbMode { BesselApprox, Exact };

struct HbParams {
  int j = 1;
  HbMode mode = HbMode::Exact;
};

/// Quadrature variances use the vacuum-variance-1/2 convention,
/// V_plus = e^{2s}/2, V_minus = e^{-2s}/2.
struct SqueezedVacuumParams {
  double squeezing = 0.0;
  double v_plus = 0.5;
  double v_minus = 0.5;
  int pool_size = 1;

  static SqueezedVacuumParams from_squeezing(double s, int pool_size = 1);
};

struct BrightSqueezedParams {
  double alpha = 0.0;
  double squeezing = 0.0;

  double mean_photons() const;
};

// ---------------------------------------------------------------------------
// Closed-form probabilities

double noon_full_pmf(int photons, double phi, int k);

struct ParityPair {
  double even;
  double odd;
};

ParityPair noon_parity_pmf(int photons, double phi);
ParityPair mz_pmf(double phi);

/// J_q(j theta)^2. Normalised only over all integers q, not over {-j..j}.
double hb_bessel_pmf(int j, double theta, int q);

/// Exact twin-Fock output statistics, index i <-> q = i - j.
std::vector<double> hb_exact_pmf(int j, double theta);

double quadrature_variance(double v_plus, double v_minus, double theta);

/// ln of the chi-square density of y = sum_{i<=n} x_i^2 with x_i ~ N(0, V(theta)).
double chi2_loglik(double y, int n, double theta, const SqueezedVacuumParams& params);

/// Unnormalised log-density after the square-root (Fisher) transformation.
double sqrt_transform_loglik(double y, int n, double theta, const SqueezedVacuumParams& params);

double chi2_sample(numerics::RandomStream& stream, int n, double variance);

/// xi = sqrt(2y / (2n - 1)), an estimate of sqrt(V).
double xi_estimator(double y, int n);

/// One homodyne quadrature sample of a bright squeezed state whose
/// anti-squeezed axis lies along the coherent amplitude at phase phi_true.
double bright_homodyne_sample(numerics::RandomStream& stream, const BrightSqueezedParams& params,
                              double phi_true, double lo_angle);

/// Clamp rounding negatives in [-1e-15, 0) to zero; anything lower is a
/// ConsistencyError.
double clamp_probability(double p);

// ---------------------------------------------------------------------------

class HbPropagator;

/// Immutable measurement model. Finite outcome spaces expose pmf(); the
/// squeezed-vacuum model has a continuous outcome on the positive real line.
class PhaseModel {
 public:
  static PhaseModel noon_full(int photons);
  static PhaseModel noon_parity(int photons);
  static PhaseModel mach_zehnder();
  static PhaseModel holland_burnett(HbParams params);
  static PhaseModel squeezed_vacuum(SqueezedVacuumParams params);

  Protocol protocol() const { return protocol_; }
  std::string_view name() const { return protocol_name(protocol_); }

  /// Mean photons consumed per detection event.
  double resource_cost() const;
  bool is_finite() const { return protocol_ != Protocol::SqueezedVacuum; }
  /// Finite outcome labels in ascending order; empty for continuous models.
  std::span<const int> outcomes() const { return labels_; }
  /// Position of a label in outcomes(); throws DomainError if absent.
  std::size_t outcome_index(double outcome) const;

  bool in_domain(double phi) const;

  /// Probabilities aligned with outcomes(). Bessel-mode Holland-Burnett
  /// values are returned unnormalised.
  std::vector<double> pmf(double phi) const;
  double log_likelihood(double outcome, double phi) const;

  double sample(numerics::RandomStream& stream, double phi) const;
  std::vector<double> sample_many(numerics::RandomStream& stream, double phi, int count) const;

  /// True when the sampled outcome lies outside the approximation's
  /// validity regime (Bessel mode: |q| > j/4). Always false otherwise.
  bool outside_validity(double outcome) const;

  int photons() const;
  const HbParams& hb_params() const;
  const SqueezedVacuumParams& squeezed_params() const;

 private:
  PhaseModel(Protocol protocol, std::variant<NoonParams, HbParams, SqueezedVacuumParams> params);

  Protocol protocol_;
  std::variant<NoonParams, HbParams, SqueezedVacuumParams> params_;
  std::vector<int> labels_;
  std::shared_ptr<const HbPropagator> hb_;
};

/// Inverse-CDF sampler over a fixed probability vector.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(std::span<const double> weights);
  std::size_t draw(numerics::RandomStream& stream) const;

 private:
  std::vector<double> cumulative_;
};

}  // namespace qsense::models

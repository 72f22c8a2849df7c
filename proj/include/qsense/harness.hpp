#pragma once

// Monte Carlo experiments: each trial samples a finite data set at the true
// phase, forms the grid posterior and extracts an estimator. Reports compare
// the empirical error with Cramer-Rao and QFI references at equal resources.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsense/bayes.hpp"
#include "qsense/information.hpp"
#include "qsense/models.hpp"
#include "qsense/numerics.hpp"

namespace qsense::harness {

enum class Estimator { PosteriorMean, CircularMean, Map };

std::string_view estimator_name(Estimator e);
Estimator parse_estimator(std::string_view name);

struct ModelSpec {
  models::Protocol protocol = models::Protocol::NoonParity;
  int photons = 1;        // NOON
  int j = 1;              // Holland-Burnett
  double squeezing = 0.0; // squeezed vacuum
  int pool_size = 1;      // squeezed vacuum

  models::PhaseModel build() const;
};

struct ScenarioConfig {
  ModelSpec model;
  bayes::PriorSpec prior;
  double true_phase = 0.0;
  std::int64_t repetitions = 1;
  std::int64_t trials = 1;
  int grid_size = bayes::kDefaultGridSize;
  std::uint64_t master_seed = 0;
  Estimator estimator = Estimator::PosteriorMean;
  double p_gen = 1.0;
  double eta_coup = 1.0;
  double eta_det = 1.0;

  /// Throws DomainError on inconsistent settings.
  void validate() const;
};

struct TrialRecord {
  std::uint64_t index = 0;
  bool failed = false;
  double estimate = 0.0;
  double error = 0.0;  // wrapped on circular topology
  double posterior_mean = 0.0;
  double posterior_variance = 0.0;
  double dispersion = 0.0;
  double info_gain = 0.0;
  /// Count of sampled outcomes outside the model's approximation regime.
  std::int64_t outside_validity = 0;
};

struct EstimationReport {
  std::int64_t trials = 0;
  std::int64_t failed_trials = 0;
  double empirical_mse = 0.0;
  double empirical_bias = 0.0;
  double mean_posterior_variance = 0.0;
  double mean_dispersion = 0.0;
  double mean_info_gain = 0.0;
  double fisher = 0.0;
  bool fisher_divergent = false;
  double qfi = 0.0;
  double cr_reference = 0.0;   // 1 / (n F)
  double qfi_reference = 0.0;  // 1 / (n F_Q)
  information::ResourceLedger ledger;
  information::BoundReport bounds{};
  std::int64_t validity_warnings = 0;
  std::vector<TrialRecord> records;
};

/// Wrap an angle difference into (-pi, pi].
double wrap_angle(double delta);

/// Prepared model, prior grid and likelihood table for one scenario.
class TrialRunner {
 public:
  explicit TrialRunner(ScenarioConfig config);

  const ScenarioConfig& config() const { return config_; }
  const models::PhaseModel& model() const { return model_; }
  const bayes::PosteriorGrid& prior_grid() const { return prior_grid_; }

  /// Sampled outcomes for one trial.
  std::vector<double> sample(numerics::RandomStream& stream) const;
  /// Posterior after the given data set.
  bayes::PosteriorGrid posterior(std::span<const double> outcomes) const;
  TrialRecord run(numerics::RandomStream& stream, std::uint64_t index = 0) const;

 private:
  ScenarioConfig config_;
  models::PhaseModel model_;
  bayes::PosteriorGrid prior_grid_;
  std::optional<bayes::LikelihoodTable> table_;
  std::optional<models::DiscreteSampler> sampler_;
};

TrialRecord run_trial(const ScenarioConfig& config, numerics::RandomStream& stream);

/// Runs config.trials independent trials (stream i = derive_stream(seed, i)).
/// Aggregates are summed in sorted order, so results do not depend on the
/// thread count or on trial order.
EstimationReport run_experiment(const ScenarioConfig& config, int threads = 1);

/// Order-independent mean (values are sorted before summation).
double stable_mean(std::vector<double> values);

// ---------------------------------------------------------------------------

struct HbSweepRow {
  std::int64_t repetitions;
  int j;
  double mean_posterior_variance;
  double empirical_mse;
  double cr_reference;        // 1 / (N (j + 1))
  double qfi_reference;       // 1 / (n F_Q)
  double classical_reference; // 1 / N
};

struct HbSweepResult {
  double total_photons;
  std::vector<HbSweepRow> rows;
  std::vector<std::string> warnings;
  std::int64_t optimum_repetitions = 0;
};

struct HbSweepSpec {
  int total_photons = 64;
  std::vector<std::int64_t> repetitions = {1, 2, 4, 8, 16};
  bayes::PriorSpec prior = bayes::PriorSpec::symmetric(numerics::kPi / 2.0);
  int grid_size = bayes::kDefaultGridSize;
  std::int64_t trials = 2000;
  std::uint64_t master_seed = 0;
  models::HbMode mode = models::HbMode::Exact;
};

HbSweepResult hb_repetition_sweep(const HbSweepSpec& spec, int threads = 1);

struct ComparisonEntry {
  double info_gain;
  double dispersion;
  double posterior_variance;
  double empirical_mse;
};

struct NoonVsMzReport {
  int photons;
  ComparisonEntry noon;             // n = 1, prior (-pi/N, pi/N)
  ComparisonEntry noon_full_circle; // n = 1, prior (-pi, pi)
  ComparisonEntry mz;               // n = N, prior (-pi, pi)
  ComparisonEntry mz_restricted;    // n = N, prior (-pi/N, pi/N)
  double uniform_variance;          // pi^2 / (3 N^2)
  double uniform_dispersion;        // 1 - sinc^2(pi / N)
};

NoonVsMzReport noon_vs_mz_comparison(int photons, int grid_size, std::int64_t trials,
                                     std::uint64_t master_seed = 0, int threads = 1);

struct MatchedSqueezedSpec {
  std::optional<double> squeezing;
  std::optional<double> total_photons;
  std::int64_t estimates = 100000;     // Monte Carlo phase estimates
  int samples_per_estimate = 1;        // homodyne samples averaged per estimate
  double operating_phase = 0.0;
  std::uint64_t master_seed = 0;
};

struct MatchedSqueezedReport {
  double alpha_sq;
  double squeezing;
  double total_photons;
  double predicted_variance;   // e^{-2s} / (4 alpha^2) per shot
  double heisenberg_variance;  // 1 / (4 N^2)
  double empirical_variance;   // linearised estimator, per estimate
  double empirical_standard_error;
  double predicted_per_estimate;
  std::int64_t estimates;
  int samples_per_estimate;
};

/// Solves s from e^{2s}/4 + sinh^2 s = N by bisection on (0, 20].
double matched_squeezing_for(double total_photons);

MatchedSqueezedReport matched_squeezed_analysis(const MatchedSqueezedSpec& spec);

struct Chi2DemoReport {
  double squeezing;
  int samples;  // n pooled quadratures per y
  double true_phase;
  std::int64_t trials;
  double variance;         // V(theta_true) = xi^2
  double mean_xi;
  double var_xi;
  double mean_xi_sq;
  double relative_variance;  // var(xi_hat) / V
  double relative_variance_standard_error;
  double classical_reference;         // 1 / (2n - 1)
  double exact_relative_variance;     // chi-distribution value for xi_hat
  double naive_qfi_variance;          // 1 / (n 2 sinh^2(2s))
};

Chi2DemoReport chi2_phase_demo(double squeezing, int samples, double true_phase,
                               std::int64_t trials, std::uint64_t master_seed = 0);

enum class ScalingMetric { Mse, PosteriorVariance };

std::string_view metric_name(ScalingMetric m);
ScalingMetric parse_metric(std::string_view name);

struct ScalingSpec {
  ScenarioConfig base;
  std::vector<int> resource_levels;
  ScalingMetric metric = ScalingMetric::Mse;
  /// NOON only: use the (-pi/N, pi/N) prior at each level.
  bool restrict_prior = false;
};

struct ScalingRow {
  int total_photons;
  double metric_value;
  double empirical_mse;
  double mean_posterior_variance;
  double cr_reference;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  double exponent;
};

/// Builds the per-level scenario for scaling_study (exposed for tests).
ScenarioConfig scaling_level_config(const ScalingSpec& spec, int level);
ScalingResult scaling_study(const ScalingSpec& spec, int threads = 1);

}  // namespace qsense::harness

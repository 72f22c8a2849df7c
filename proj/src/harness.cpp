#include "qsense/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "qsense/errors.hpp"

namespace qsense::harness {

using models::PhaseModel;
using models::Protocol;
using numerics::kPi;

std::string_view estimator_name(Estimator e) {
  switch (e) {
    case Estimator::PosteriorMean: return "posterior_mean";
    case Estimator::CircularMean: return "circular_mean";
    case Estimator::Map: return "map";
  }
  return "posterior_mean";
}

Estimator parse_estimator(std::string_view name) {
  for (Estimator e : {Estimator::PosteriorMean, Estimator::CircularMean, Estimator::Map}) {
    if (estimator_name(e) == name) return e;
  }
  throw DomainError("unknown estimator '" + std::string(name) + "'");
}

PhaseModel ModelSpec::build() const {
  switch (protocol) {
    case Protocol::NoonFull: return PhaseModel::noon_full(photons);
    case Protocol::NoonParity: return PhaseModel::noon_parity(photons);
    case Protocol::MachZehnder: return PhaseModel::mach_zehnder();
    case Protocol::HollandBurnettBessel:
      return PhaseModel::holland_burnett({j, models::HbMode::BesselApprox});
    case Protocol::HollandBurnettExact:
      return PhaseModel::holland_burnett({j, models::HbMode::Exact});
    case Protocol::SqueezedVacuum:
      return PhaseModel::squeezed_vacuum(
          models::SqueezedVacuumParams::from_squeezing(squeezing, pool_size));
  }
  throw DomainError("unknown protocol");
}

void ScenarioConfig::validate() const {
  prior.validate();
  if (repetitions < 1) throw DomainError("repetitions must be >= 1");
  if (trials < 1) throw DomainError("trials must be >= 1");
  if (!std::isfinite(true_phase)) throw DomainError("true phase must be finite");
  if (grid_size < 33 || grid_size % 2 == 0) throw DomainError("grid size must be odd and >= 33");
  // Throws on invalid efficiencies.
  (void)information::ResourceLedger::make(repetitions, 1.0, p_gen, eta_coup, eta_det);
}

double wrap_angle(double delta) {
  double w = std::remainder(delta, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

double stable_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

// ---------------------------------------------------------------------------

TrialRunner::TrialRunner(ScenarioConfig config)
    : config_((config.validate(), config)),
      model_(config_.model.build()),
      prior_grid_(bayes::make_grid(config_.prior, config_.grid_size)) {
  if (model_.is_finite()) {
    table_.emplace(model_, prior_grid_.nodes());
    // Bessel-mode weights are renormalised over {-j..j} by the sampler.
    sampler_.emplace(model_.pmf(config_.true_phase));
  }
}

std::vector<double> TrialRunner::sample(numerics::RandomStream& stream) const {
  const auto n = static_cast<int>(config_.repetitions);
  if (!sampler_) return model_.sample_many(stream, config_.true_phase, n);
  const auto labels = model_.outcomes();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = labels[sampler_->draw(stream)];
  return out;
}

bayes::PosteriorGrid TrialRunner::posterior(std::span<const double> outcomes) const {
  if (table_) return bayes::update(prior_grid_, *table_, outcomes);
  return bayes::update(prior_grid_, model_, outcomes);
}

TrialRecord TrialRunner::run(numerics::RandomStream& stream, std::uint64_t index) const {
  TrialRecord record;
  record.index = index;
  const auto outcomes = sample(stream);
  for (double o : outcomes) {
    if (model_.outside_validity(o)) ++record.outside_validity;
  }
  try {
    const auto post = posterior(outcomes);
    const auto m = bayes::moments(post);
    switch (config_.estimator) {
      case Estimator::PosteriorMean: record.estimate = m.mean; break;
      case Estimator::CircularMean: record.estimate = m.circular_mean; break;
      case Estimator::Map: record.estimate = m.map; break;
    }
    const double delta = record.estimate - config_.true_phase;
    record.error = config_.prior.topology == bayes::Topology::Circular ? wrap_angle(delta) : delta;
    record.posterior_mean = m.mean;
    record.posterior_variance = m.variance;
    record.dispersion = bayes::circular_dispersion(post);
    record.info_gain = bayes::info_gain(prior_grid_, post);
  } catch (const DegeneratePosterior&) {
    record.failed = true;
  }
  return record;
}

TrialRecord run_trial(const ScenarioConfig& config, numerics::RandomStream& stream) {
  return TrialRunner(config).run(stream, stream.stream_index());
}

EstimationReport run_experiment(const ScenarioConfig& config, int threads) {
  const TrialRunner runner(config);
  const auto total = static_cast<std::size_t>(config.trials);
  std::vector<TrialRecord> records(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        auto stream = numerics::derive_stream(config.master_seed, i);
        records[i] = runner.run(stream, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const int workers = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(total, 1)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  EstimationReport report;
  report.trials = config.trials;
  std::vector<double> sq_err, err, var, disp, gain;
  for (const auto& r : records) {
    report.validity_warnings += r.outside_validity;
    if (r.failed) {
      ++report.failed_trials;
      continue;
    }
    sq_err.push_back(r.error * r.error);
    err.push_back(r.error);
    var.push_back(r.posterior_variance);
    disp.push_back(r.dispersion);
    gain.push_back(r.info_gain);
  }
  report.empirical_mse = stable_mean(std::move(sq_err));
  report.empirical_bias = stable_mean(std::move(err));
  report.mean_posterior_variance = stable_mean(std::move(var));
  report.mean_dispersion = stable_mean(std::move(disp));
  report.mean_info_gain = stable_mean(std::move(gain));

  const auto& model = runner.model();
  const auto fisher = information::classical_fisher(model, config.true_phase);
  report.fisher = fisher.value;
  report.fisher_divergent = fisher.divergent;
  report.qfi = information::qfi_for_model(model);
  const double n = static_cast<double>(config.repetitions);
  report.cr_reference = fisher.value > 0.0 ? 1.0 / (n * fisher.value)
                                           : std::numeric_limits<double>::infinity();
  report.qfi_reference = report.qfi > 0.0 ? 1.0 / (n * report.qfi)
                                          : std::numeric_limits<double>::infinity();
  report.ledger = information::ResourceLedger::make(config.repetitions, model.resource_cost(),
                                                    config.p_gen, config.eta_coup, config.eta_det);
  const auto check = information::heisenberg_condition(config.repetitions, model.resource_cost(),
                                                       report.qfi);
  report.bounds = {report.fisher, report.qfi, report.cr_reference, check.residual,
                   check.classification};
  report.records = std::move(records);
  return report;
}

// ---------------------------------------------------------------------------

HbSweepResult hb_repetition_sweep(const HbSweepSpec& spec, int threads) {
  if (spec.total_photons < 2) throw DomainError("hb sweep: total photons must be >= 2");
  HbSweepResult result;
  result.total_photons = spec.total_photons;
  const double total = spec.total_photons;
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t n : spec.repetitions) {
    if (n < 1 || spec.total_photons % 2 != 0 || (spec.total_photons / 2) % n != 0) {
      result.warnings.push_back("skipping n=" + std::to_string(n) + ": does not divide N/2 = " +
                                std::to_string(spec.total_photons / 2));
      continue;
    }
    const int j = static_cast<int>(spec.total_photons / (2 * n));
    ScenarioConfig config;
    config.model.protocol = spec.mode == models::HbMode::Exact ? Protocol::HollandBurnettExact
                                                               : Protocol::HollandBurnettBessel;
    config.model.j = j;
    config.prior = spec.prior;
    config.true_phase = 0.0;
    config.repetitions = n;
    config.trials = spec.trials;
    config.grid_size = spec.grid_size;
    config.master_seed = spec.master_seed;
    const auto report = run_experiment(config, threads);
    HbSweepRow row{n,
                   j,
                   report.mean_posterior_variance,
                   report.empirical_mse,
                   information::cr_bound_hb(total, j),
                   information::cr_bound(n, information::qfi_hb(j)),
                   1.0 / total};
    if (row.mean_posterior_variance < best) {
      best = row.mean_posterior_variance;
      result.optimum_repetitions = n;
    }
    result.rows.push_back(row);
  }
  return result;
}

namespace {

ComparisonEntry compare_entry(const ScenarioConfig& config, int threads) {
  const auto r = run_experiment(config, threads);
  return {r.mean_info_gain, r.mean_dispersion, r.mean_posterior_variance, r.empirical_mse};
}

}  // namespace

NoonVsMzReport noon_vs_mz_comparison(int photons, int grid_size, std::int64_t trials,
                                     std::uint64_t master_seed, int threads) {
  if (photons < 2) throw DomainError("noon_vs_mz_comparison: N must be >= 2");
  NoonVsMzReport out{};
  out.photons = photons;
  const double half = kPi / photons;

  ScenarioConfig noon;
  noon.model.protocol = Protocol::NoonParity;
  noon.model.photons = photons;
  noon.prior = bayes::PriorSpec::symmetric(half);
  noon.repetitions = 1;
  noon.trials = trials;
  noon.grid_size = grid_size;
  noon.master_seed = master_seed;
  out.noon = compare_entry(noon, threads);

  noon.prior = bayes::PriorSpec::full_circle();
  out.noon_full_circle = compare_entry(noon, threads);

  ScenarioConfig mz = noon;
  mz.model.protocol = Protocol::MachZehnder;
  mz.repetitions = photons;
  mz.prior = bayes::PriorSpec::full_circle();
  out.mz = compare_entry(mz, threads);

  mz.prior = bayes::PriorSpec::symmetric(half);
  out.mz_restricted = compare_entry(mz, threads);

  out.uniform_variance = kPi * kPi / (3.0 * photons * photons);
  const double sc = numerics::sinc(half);
  out.uniform_dispersion = 1.0 - sc * sc;
  return out;
}

// ---------------------------------------------------------------------------

double matched_squeezing_for(double total_photons) {
  auto excess = [total_photons](double s) {
    const double sh = std::sinh(s);
    return std::exp(2.0 * s) / 4.0 + sh * sh - total_photons;
  };
  double lo = 0.0, hi = 20.0;
  if (!(excess(lo) < 0.0) || !(excess(hi) >= 0.0)) {
    throw DomainError("matched squeezing: no solution for N = " + std::to_string(total_photons) +
                      " with s in (0, 20]");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

MatchedSqueezedReport matched_squeezed_analysis(const MatchedSqueezedSpec& spec) {
  double s = 0.0;
  if (spec.squeezing) {
    s = *spec.squeezing;
    if (!(s >= 0.0) || s > 20.0) throw DomainError("matched analysis: s must lie in [0, 20]");
  } else if (spec.total_photons) {
    s = matched_squeezing_for(*spec.total_photons);
  } else {
    throw DomainError("matched analysis: give either s or N");
  }
  if (spec.estimates < 2 || spec.samples_per_estimate < 1) {
    throw DomainError("matched analysis: need >= 2 estimates and >= 1 sample per estimate");
  }

  MatchedSqueezedReport out{};
  out.squeezing = s;
  out.alpha_sq = std::exp(2.0 * s) / 4.0;
  const double sh = std::sinh(s);
  out.total_photons = out.alpha_sq + sh * sh;
  out.predicted_variance = std::exp(-2.0 * s) / (4.0 * out.alpha_sq);
  out.heisenberg_variance = 1.0 / (4.0 * out.total_photons * out.total_photons);
  out.estimates = spec.estimates;
  out.samples_per_estimate = spec.samples_per_estimate;
  out.predicted_per_estimate = out.predicted_variance / spec.samples_per_estimate;

  // Local operating point: the homodyne angle sits pi/2 from the known
  // amplitude phase, where x ~ sqrt(2) alpha sin(phi - phi0).
  const models::BrightSqueezedParams params{std::sqrt(out.alpha_sq), s};
  const double phi0 = spec.operating_phase;
  const double lo_angle = phi0 + kPi / 2.0;
  const double slope = std::sqrt(2.0) * params.alpha;
  std::vector<double> estimates(static_cast<std::size_t>(spec.estimates));
  for (std::size_t t = 0; t < estimates.size(); ++t) {
    auto stream = numerics::derive_stream(spec.master_seed, t);
    double acc = 0.0;
    for (int k = 0; k < spec.samples_per_estimate; ++k) {
      acc += models::bright_homodyne_sample(stream, params, phi0, lo_angle);
    }
    estimates[t] = phi0 + (acc / spec.samples_per_estimate) / slope;
  }
  const double mean = stable_mean(estimates);
  std::vector<double> sq(estimates.size());
  for (std::size_t t = 0; t < estimates.size(); ++t) sq[t] = (estimates[t] - mean) * (estimates[t] - mean);
  const double count = static_cast<double>(estimates.size());
  out.empirical_variance = stable_mean(std::move(sq)) * count / (count - 1.0);
  out.empirical_standard_error = out.empirical_variance * std::sqrt(2.0 / (count - 1.0));
  return out;
}

Chi2DemoReport chi2_phase_demo(double squeezing, int samples, double true_phase,
                               std::int64_t trials, std::uint64_t master_seed) {
  if (samples < 2) throw DomainError("chi2_phase_demo: n must be >= 2");
  if (trials < 2) throw DomainError("chi2_phase_demo: need >= 2 trials");
  const auto params = models::SqueezedVacuumParams::from_squeezing(squeezing, samples);
  Chi2DemoReport out{};
  out.squeezing = squeezing;
  out.samples = samples;
  out.true_phase = true_phase;
  out.trials = trials;
  out.variance = models::quadrature_variance(params.v_plus, params.v_minus, true_phase);

  std::vector<double> xi(static_cast<std::size_t>(trials));
  for (std::size_t t = 0; t < xi.size(); ++t) {
    auto stream = numerics::derive_stream(master_seed, t);
    xi[t] = models::xi_estimator(models::chi2_sample(stream, samples, out.variance), samples);
  }
  out.mean_xi = stable_mean(xi);
  std::vector<double> sq(xi.size()), c2(xi.size()), c4(xi.size());
  for (std::size_t t = 0; t < xi.size(); ++t) {
    sq[t] = xi[t] * xi[t];
    const double d = xi[t] - out.mean_xi;
    c2[t] = d * d;
    c4[t] = d * d * d * d;
  }
  const double count = static_cast<double>(xi.size());
  out.mean_xi_sq = stable_mean(std::move(sq));
  const double m2 = stable_mean(std::move(c2));
  const double m4 = stable_mean(std::move(c4));
  out.var_xi = m2 * count / (count - 1.0);
  out.relative_variance = out.var_xi / out.variance;
  out.relative_variance_standard_error = std::sqrt(std::max(0.0, m4 - m2 * m2) / count) / out.variance;
  out.classical_reference = 1.0 / (2.0 * samples - 1.0);
  // Var(sqrt(chi2_n)) = n - 2 Gamma((n+1)/2)^2 / Gamma(n/2)^2.
  const double log_ratio = numerics::log_gamma(0.5 * (samples + 1)) - numerics::log_gamma(0.5 * samples);
  const double chi_var = samples - 2.0 * std::exp(2.0 * log_ratio);
  out.exact_relative_variance = 2.0 * chi_var / (2.0 * samples - 1.0);
  const double fq = information::qfi_squeezed_vacuum(squeezing);
  out.naive_qfi_variance = fq > 0.0 ? 1.0 / (samples * fq) : std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------

std::string_view metric_name(ScalingMetric m) {
  return m == ScalingMetric::Mse ? "mse" : "posterior_variance";
}

ScalingMetric parse_metric(std::string_view name) {
  if (name == "mse") return ScalingMetric::Mse;
  if (name == "posterior_variance") return ScalingMetric::PosteriorVariance;
  throw DomainError("unknown scaling metric '" + std::string(name) + "'");
}

ScenarioConfig scaling_level_config(const ScalingSpec& spec, int level) {
  if (level < 1) throw DomainError("scaling study: resource levels must be >= 1");
  ScenarioConfig config = spec.base;
  switch (config.model.protocol) {
    case Protocol::NoonFull:
    case Protocol::NoonParity:
      config.model.photons = level;
      config.repetitions = 1;
      if (spec.restrict_prior) config.prior = bayes::PriorSpec::symmetric(kPi / level);
      break;
    case Protocol::MachZehnder:
      config.repetitions = level;
      break;
    case Protocol::HollandBurnettBessel:
    case Protocol::HollandBurnettExact: {
      const int per_shot = 2 * config.model.j;
      if (level % per_shot != 0) {
        throw DomainError("scaling study: level " + std::to_string(level) +
                          " not a multiple of 2j = " + std::to_string(per_shot));
      }
      config.repetitions = level / per_shot;
      break;
    }
    case Protocol::SqueezedVacuum:
      throw DomainError("scaling study: squeezed-vacuum model has no integer resource ladder");
  }
  return config;
}

ScalingResult scaling_study(const ScalingSpec& spec, int threads) {
  if (spec.resource_levels.size() < 3) throw DomainError("scaling study: need >= 3 resource levels");
  ScalingResult result;
  std::vector<information::ResourcePoint> points;
  for (int level : spec.resource_levels) {
    const auto config = scaling_level_config(spec, level);
    const auto report = run_experiment(config, threads);
    const double value = spec.metric == ScalingMetric::Mse ? report.empirical_mse
                                                           : report.mean_posterior_variance;
    result.rows.push_back({level, value, report.empirical_mse, report.mean_posterior_variance,
                           report.cr_reference});
    points.push_back({static_cast<double>(level), value});
  }
  result.exponent = information::scaling_exponent(points);
  return result;
}

}  // namespace qsense::harness

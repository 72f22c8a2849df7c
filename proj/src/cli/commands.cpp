#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qsense/cli.hpp"
#include "qsense/errors.hpp"

namespace qsense::cli {

using nlohmann::json;
using numerics::kPi;

namespace {

const json& section(const json& config, const std::string& key) {
  static const json empty = json::object();
  const auto it = config.find(key);
  if (it == config.end()) return empty;
  if (!it->is_object()) throw ConfigError(fmt::format("field '{}': expected an object", key));
  return *it;
}

template <typename T>
T get_or(const json& obj, const std::string& key, const std::string& path, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("field '{}': wrong type", path));
  }
}

template <typename T>
T get_required(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError(fmt::format("field '{}': missing", path));
  return get_or<T>(obj, key, path, T{});
}

std::uint64_t seed_of(const json& config) { return config.at("seed").get<std::uint64_t>(); }

json rows_json(const harness::ComparisonEntry& e) {
  return {{"info_gain", e.info_gain},
          {"dispersion", e.dispersion},
          {"posterior_variance", e.posterior_variance},
          {"empirical_mse", e.empirical_mse}};
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", value);
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw std::logic_error("csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
  out_ << '\n';
}

json to_json(const information::ResourceLedger& ledger) {
  return {{"repetitions", ledger.repetitions}, {"per_shot_cost", ledger.per_shot_cost},
          {"total", ledger.total},             {"p_gen", ledger.p_gen},
          {"eta_coup", ledger.eta_coup},       {"eta_det", ledger.eta_det},
          {"yield", ledger.yield()}};
}

json to_json(const harness::EstimationReport& r, bool include_trials) {
  json out = {{"trials", r.trials},
              {"failed_trials", r.failed_trials},
              {"empirical_mse", r.empirical_mse},
              {"empirical_bias", r.empirical_bias},
              {"mean_posterior_variance", r.mean_posterior_variance},
              {"mean_dispersion", r.mean_dispersion},
              {"mean_info_gain", r.mean_info_gain},
              {"fisher", r.fisher},
              {"fisher_divergent", r.fisher_divergent},
              {"qfi", r.qfi},
              {"cr_reference", r.cr_reference},
              {"qfi_reference", r.qfi_reference},
              {"ledger", to_json(r.ledger)},
              {"bounds",
               {{"fisher_per_detection", r.bounds.fisher_per_detection},
                {"qfi_per_detection", r.bounds.qfi_per_detection},
                {"cr_variance_bound", r.bounds.cr_variance_bound},
                {"heisenberg_residual", r.bounds.heisenberg_residual},
                {"scaling_class", information::scaling_class_name(r.bounds.scaling_class)}}},
              {"validity_warnings", r.validity_warnings}};
  if (include_trials) {
    json records = json::array();
    for (const auto& t : r.records) {
      records.push_back({{"index", t.index},
                         {"failed", t.failed},
                         {"estimate", t.estimate},
                         {"error", t.error},
                         {"posterior_mean", t.posterior_mean},
                         {"posterior_variance", t.posterior_variance},
                         {"dispersion", t.dispersion},
                         {"info_gain", t.info_gain},
                         {"outside_validity", t.outside_validity}});
    }
    out["records"] = std::move(records);
  }
  return out;
}

json to_json(const harness::Chi2DemoReport& r) {
  return {{"squeezing", r.squeezing},
          {"samples", r.samples},
          {"true_phase", r.true_phase},
          {"trials", r.trials},
          {"variance", r.variance},
          {"mean_xi", r.mean_xi},
          {"var_xi", r.var_xi},
          {"mean_xi_sq", r.mean_xi_sq},
          {"relative_variance", r.relative_variance},
          {"relative_variance_standard_error", r.relative_variance_standard_error},
          {"classical_reference", r.classical_reference},
          {"exact_relative_variance", r.exact_relative_variance},
          {"naive_qfi_variance", r.naive_qfi_variance}};
}

json to_json(const harness::MatchedSqueezedReport& r) {
  return {{"alpha_sq", r.alpha_sq},
          {"squeezing", r.squeezing},
          {"total_photons", r.total_photons},
          {"predicted_variance", r.predicted_variance},
          {"heisenberg_variance", r.heisenberg_variance},
          {"empirical_variance", r.empirical_variance},
          {"empirical_standard_error", r.empirical_standard_error},
          {"predicted_per_estimate", r.predicted_per_estimate},
          {"estimates", r.estimates},
          {"samples_per_estimate", r.samples_per_estimate}};
}

// ---------------------------------------------------------------------------

void cmd_fisher(const json& config, const Options&, std::ostream& csv) {
  const auto scenario = scenario_from_json(config);
  const auto model = scenario.model.build();
  const json& range = section(config, "phi_range");
  const double lo = range.contains("lo") ? parse_angle(range.at("lo"), "phi_range.lo") : scenario.prior.lo;
  const double hi = range.contains("hi") ? parse_angle(range.at("hi"), "phi_range.hi") : scenario.prior.hi;
  const auto points = get_or<std::int64_t>(range, "points", "phi_range.points", 101);
  if (points < 1 || !(lo <= hi)) throw ConfigError("field 'phi_range': need lo <= hi and points >= 1");

  const double qfi = information::qfi_for_model(model);
  CsvWriter writer(csv, {"phi", "fisher", "qfi", "cr_bound"});
  for (std::int64_t i = 0; i < points; ++i) {
    const double phi = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    const auto f = information::classical_fisher(model, phi);
    const double fisher = f.divergent ? std::numeric_limits<double>::infinity() : f.value;
    const double bound = f.divergent ? 0.0 : information::cr_bound(scenario.repetitions, fisher);
    writer.row({phi, fisher, qfi, bound});
  }
}

void cmd_posterior(const json& config, const Options&, std::ostream& csv) {
  const auto scenario = scenario_from_json(config);
  const auto model = scenario.model.build();
  const auto prior = bayes::make_grid(scenario.prior, scenario.grid_size);

  std::vector<double> data;
  if (const auto it = config.find("data"); it != config.end()) {
    if (!it->is_array()) throw ConfigError("field 'data': expected an array of outcomes");
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_number()) throw ConfigError(fmt::format("field 'data[{}]': expected a number", i));
      data.push_back((*it)[i].get<double>());
    }
  } else {
    numerics::RandomStream stream(scenario.master_seed, 0);
    data = model.sample_many(stream, scenario.true_phase, static_cast<int>(scenario.repetitions));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      if (model.is_finite()) {
        (void)model.outcome_index(data[i]);
      } else if (!(data[i] >= 0.0)) {
        throw DomainError("negative value");
      }
    } catch (const DomainError&) {
      throw ConfigError(fmt::format("field 'data[{}]': outcome {} not in the outcome space", i,
                                    format_number(data[i])));
    }
  }
  const auto post = bayes::update(prior, model, data);
  CsvWriter writer(csv, {"phi", "prior", "posterior"});
  for (std::size_t i = 0; i < post.size(); ++i) {
    writer.row({post.nodes()[i], prior.weights()[i], post.weights()[i]});
  }
}

json cmd_sweep(const std::string& kind, const json& config, const Options& options, std::ostream& csv) {
  const json& sweep = section(config, "sweep");
  json summary = {{"kind", kind}};

  if (kind == "hb-repetition") {
    harness::HbSweepSpec spec;
    spec.total_photons = static_cast<int>(get_or<std::int64_t>(sweep, "N_total", "sweep.N_total", 64));
    spec.repetitions = get_or(sweep, "n_values", "sweep.n_values", spec.repetitions);
    const auto mode = get_or<std::string>(sweep, "mode", "sweep.mode", "exact");
    if (mode != "exact" && mode != "bessel") throw ConfigError("field 'sweep.mode': expected exact|bessel");
    spec.mode = mode == "exact" ? models::HbMode::Exact : models::HbMode::BesselApprox;
    if (config.contains("prior")) {
      const json& p = section(config, "prior");
      if (!p.contains("lo") || !p.contains("hi")) throw ConfigError("field 'prior': needs 'lo' and 'hi'");
      spec.prior.lo = parse_angle(p.at("lo"), "prior.lo");
      spec.prior.hi = parse_angle(p.at("hi"), "prior.hi");
      spec.prior.topology = std::fabs(spec.prior.hi - spec.prior.lo - 2 * kPi) <= 1e-9
                                ? bayes::Topology::Circular
                                : bayes::Topology::Linear;
    }
    spec.grid_size = static_cast<int>(get_or<std::int64_t>(config, "grid_size", "grid_size", spec.grid_size));
    spec.trials = get_or<std::int64_t>(config, "trials", "trials", spec.trials);
    spec.master_seed = seed_of(config);
    harness::HbSweepResult result;
    try {
      result = harness::hb_repetition_sweep(spec, options.threads);
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("invalid sweep: {}", e.what()));
    }
    CsvWriter writer(csv, {"n", "j", "mean_posterior_variance", "empirical_mse", "cr_reference",
                           "qfi_reference", "classical_reference"});
    for (const auto& r : result.rows) {
      writer.row({static_cast<double>(r.repetitions), static_cast<double>(r.j), r.mean_posterior_variance,
                  r.empirical_mse, r.cr_reference, r.qfi_reference, r.classical_reference});
    }
    summary["total_photons"] = result.total_photons;
    summary["optimum_n"] = result.optimum_repetitions;
    summary["warnings"] = result.warnings;
    return summary;
  }

  if (kind == "scaling") {
    harness::ScalingSpec spec;
    spec.base = scenario_from_json(config);
    spec.resource_levels = get_required<std::vector<int>>(sweep, "N_values", "sweep.N_values");
    try {
      spec.metric = harness::parse_metric(get_or<std::string>(sweep, "metric", "sweep.metric", "mse"));
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("field 'sweep.metric': {}", e.what()));
    }
    spec.restrict_prior = get_or(sweep, "restrict_prior", "sweep.restrict_prior", false);
    harness::ScalingResult result;
    try {
      for (int level : spec.resource_levels) (void)harness::scaling_level_config(spec, level).model.build();
      result = harness::scaling_study(spec, options.threads);
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("invalid sweep: {}", e.what()));
    }
    CsvWriter writer(csv, {"total_photons", "metric", "empirical_mse", "mean_posterior_variance", "cr_reference"});
    for (const auto& r : result.rows) {
      writer.row({static_cast<double>(r.total_photons), r.metric_value, r.empirical_mse,
                  r.mean_posterior_variance, r.cr_reference});
    }
    summary["metric"] = harness::metric_name(spec.metric);
    summary["exponent"] = result.exponent;
    return summary;
  }

  if (kind == "noon-vs-mz") {
    const int photons = static_cast<int>(
        get_or<std::int64_t>(sweep, "N", "sweep.N",
                             get_or<std::int64_t>(section(config, "params"), "N", "params.N", 8)));
    const int grid = static_cast<int>(get_or<std::int64_t>(config, "grid_size", "grid_size", bayes::kDefaultGridSize));
    const auto trials = get_or<std::int64_t>(config, "trials", "trials", 200);
    harness::NoonVsMzReport report;
    try {
      report = harness::noon_vs_mz_comparison(photons, grid, trials, seed_of(config), options.threads);
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("invalid sweep: {}", e.what()));
    }
    // case column: 0 noon, 1 noon_full_circle, 2 mz, 3 mz_restricted
    CsvWriter writer(csv, {"case", "info_gain", "dispersion", "posterior_variance", "empirical_mse"});
    const harness::ComparisonEntry* entries[] = {&report.noon, &report.noon_full_circle, &report.mz,
                                                 &report.mz_restricted};
    for (int c = 0; c < 4; ++c) {
      const auto& e = *entries[c];
      writer.row({static_cast<double>(c), e.info_gain, e.dispersion, e.posterior_variance, e.empirical_mse});
    }
    summary["N"] = report.photons;
    summary["cases"] = {{"noon", rows_json(report.noon)},
                        {"noon_full_circle", rows_json(report.noon_full_circle)},
                        {"mz", rows_json(report.mz)},
                        {"mz_restricted", rows_json(report.mz_restricted)}};
    summary["uniform_variance"] = report.uniform_variance;
    summary["uniform_dispersion"] = report.uniform_dispersion;
    return summary;
  }

  throw ConfigError(fmt::format("unknown sweep kind '{}' (hb-repetition|scaling|noon-vs-mz)", kind));
}

json cmd_report(const json& config, const Options& options) {
  const auto scenario_kind = get_or<std::string>(config, "scenario", "scenario", "experiment");
  json result;
  if (scenario_kind == "experiment") {
    const auto scenario = scenario_from_json(config);
    const bool include = get_or(config, "record_trials", "record_trials", true);
    result = to_json(harness::run_experiment(scenario, options.threads), include);
  } else if (scenario_kind == "chi2-demo") {
    const json& c = section(config, "chi2");
    const double s = get_required<double>(c, "s", "chi2.s");
    const int n = get_required<int>(c, "n", "chi2.n");
    const double theta = c.contains("theta") ? parse_angle(c.at("theta"), "chi2.theta") : 0.0;
    const auto trials = get_or<std::int64_t>(c, "trials", "chi2.trials", 100000);
    try {
      result = to_json(harness::chi2_phase_demo(s, n, theta, trials, seed_of(config)));
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("field 'chi2': {}", e.what()));
    }
  } else if (scenario_kind == "matched-squeezed") {
    const json& m = section(config, "matched");
    harness::MatchedSqueezedSpec spec;
    if (m.contains("s")) spec.squeezing = get_required<double>(m, "s", "matched.s");
    if (m.contains("N")) spec.total_photons = get_required<double>(m, "N", "matched.N");
    spec.estimates = get_or<std::int64_t>(m, "estimates", "matched.estimates", spec.estimates);
    spec.samples_per_estimate = get_or<int>(m, "samples_per_estimate", "matched.samples_per_estimate", 1);
    if (m.contains("operating_phase")) {
      spec.operating_phase = parse_angle(m.at("operating_phase"), "matched.operating_phase");
    }
    spec.master_seed = seed_of(config);
    try {
      result = to_json(harness::matched_squeezed_analysis(spec));
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("field 'matched': {}", e.what()));
    }
  } else {
    throw ConfigError(fmt::format("field 'scenario': unknown '{}' (experiment|chi2-demo|matched-squeezed)",
                                  scenario_kind));
  }
  std::vector<std::string> outputs;
  if (options.out) outputs.push_back(*options.out);
  return {{"schema_version", kSchemaVersion},
          {"scenario", scenario_kind},
          {"manifest", to_json(make_manifest(config, options, outputs))},
          {"config", config},
          {"result", result}};
}

// ---------------------------------------------------------------------------

namespace {

std::string resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
      p = std::filesystem::path(dir) / p;
    }
  }
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p.string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void emit(const Options& options, const std::string& content) {
  if (options.out) {
    write_file(resolve_output(*options.out), content);
  } else {
    std::cout << content;
  }
}

void add_common(CLI::App* cmd, Options& options) {
  cmd->add_option("--config", options.config_path, "Scenario document (JSON)")->required();
  cmd->add_option("--out", options.out, "Output path (stdout when omitted)");
  cmd->add_option("--seed", options.seed, "Override the master seed");
  cmd->add_option("--threads", options.threads, "Worker threads")->check(CLI::Range(1, 1024));
  cmd->add_flag("--no-timestamp", options.no_timestamp, "Omit the wall-clock timestamp");
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Phase estimation with non-classical light: Fisher bounds and Bayesian posteriors"};
  app.require_subcommand(1);
  Options options;
  std::string sweep_kind;

  auto* fisher = app.add_subcommand("fisher", "Fisher information and Cramer-Rao bound over a phase range");
  auto* posterior = app.add_subcommand("posterior", "Grid posterior for a data set");
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep (hb-repetition | scaling | noon-vs-mz)");
  auto* report = app.add_subcommand("report", "Monte Carlo estimation report (JSON)");
  for (auto* cmd : {fisher, posterior, sweep, report}) add_common(cmd, options);
  sweep->add_option("kind", sweep_kind, "Sweep kind")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const json config = apply_overrides(load_config(options.config_path), options);
    std::ostringstream buffer;
    if (*fisher) {
      cmd_fisher(config, options, buffer);
      emit(options, buffer.str());
    } else if (*posterior) {
      cmd_posterior(config, options, buffer);
      emit(options, buffer.str());
    } else if (*sweep) {
      json summary = cmd_sweep(sweep_kind, config, options, buffer);
      std::vector<std::string> outputs;
      if (options.out) outputs = {*options.out, *options.out + ".summary.json"};
      summary["manifest"] = to_json(make_manifest(config, options, outputs));
      emit(options, buffer.str());
      if (options.out) {
        write_file(resolve_output(*options.out + ".summary.json"), summary.dump(2) + "\n");
      } else {
        std::cerr << summary.dump(2) << '\n';
      }
    } else {
      emit(options, cmd_report(config, options).dump(2) + "\n");
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace qsense::cli

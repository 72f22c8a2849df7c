#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "qsense/cli.hpp"
#include "qsense/errors.hpp"

namespace qsense::cli {

using nlohmann::json;
using numerics::kPi;

namespace {

std::string location_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return fmt::format("line {}, column {}", line, column);
}

const json* find_field(const json& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::int64_t int_field(const json& obj, const std::string& key, const std::string& path,
                       std::optional<std::int64_t> fallback, std::int64_t minimum) {
  const json* v = find_field(obj, key);
  if (v == nullptr) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("field '{}': missing required integer", path));
  }
  if (!v->is_number_integer()) throw ConfigError(fmt::format("field '{}': expected an integer", path));
  const auto value = v->get<std::int64_t>();
  if (value < minimum) throw ConfigError(fmt::format("field '{}': must be >= {}", path, minimum));
  return value;
}

double number_field(const json& obj, const std::string& key, const std::string& path,
                    std::optional<double> fallback) {
  const json* v = find_field(obj, key);
  if (v == nullptr) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("field '{}': missing required number", path));
  }
  if (!v->is_number()) throw ConfigError(fmt::format("field '{}': expected a number", path));
  return v->get<double>();
}

std::string string_field(const json& obj, const std::string& key, const std::string& path,
                         std::optional<std::string> fallback) {
  const json* v = find_field(obj, key);
  if (v == nullptr) {
    if (fallback) return *fallback;
    throw ConfigError(fmt::format("field '{}': missing required string", path));
  }
  if (!v->is_string()) throw ConfigError(fmt::format("field '{}': expected a string", path));
  return v->get<std::string>();
}

}  // namespace

json parse_config_text(const std::string& text) {
  try {
    json doc = json::parse(text);
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    return doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config syntax error at {}: {}", location_of(text, e.byte), e.what()));
  }
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

json apply_overrides(json config, const Options& options) {
  if (options.seed) config["seed"] = *options.seed;
  const json* seed = find_field(config, "seed");
  if (seed == nullptr) throw ConfigError("field 'seed': required (set it in the config or pass --seed)");
  if (!seed->is_number_unsigned()) throw ConfigError("field 'seed': expected a non-negative integer");
  return config;
}

double parse_angle(const json& value, const std::string& field) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) throw ConfigError(fmt::format("field '{}': expected a number or angle string", field));
  static const std::regex pattern(
      R"(^\s*([+-])?\s*(?:(\d+(?:\.\d*)?)\s*\*?\s*)?pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$)");
  const auto text = value.get<std::string>();
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("field '{}': cannot parse angle '{}'", field, text));
  }
  double v = kPi;
  if (m[2].matched) v *= std::stod(m[2].str());
  if (m[3].matched) {
    const double den = std::stod(m[3].str());
    if (den == 0.0) throw ConfigError(fmt::format("field '{}': zero denominator", field));
    v /= den;
  }
  if (m[1].matched && m[1].str() == "-") v = -v;
  return v;
}

harness::ScenarioConfig scenario_from_json(const json& config) {
  harness::ScenarioConfig out;
  const std::string protocol = string_field(config, "protocol", "protocol", std::nullopt);
  const json params = config.contains("params") ? config.at("params") : json::object();
  if (!params.is_object()) throw ConfigError("field 'params': expected an object");

  try {
    if (protocol == "hb") {
      const auto mode = string_field(params, "mode", "params.mode", "exact");
      if (mode != "exact" && mode != "bessel") throw ConfigError("field 'params.mode': expected exact|bessel");
      out.model.protocol = mode == "exact" ? models::Protocol::HollandBurnettExact
                                           : models::Protocol::HollandBurnettBessel;
    } else {
      out.model.protocol = models::parse_protocol(protocol);
    }
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("field 'protocol': {}", e.what()));
  }

  using models::Protocol;
  switch (out.model.protocol) {
    case Protocol::NoonFull:
    case Protocol::NoonParity:
      out.model.photons = static_cast<int>(int_field(params, "N", "params.N", std::nullopt, 1));
      break;
    case Protocol::MachZehnder:
      break;
    case Protocol::HollandBurnettBessel:
    case Protocol::HollandBurnettExact:
      out.model.j = static_cast<int>(int_field(params, "j", "params.j", std::nullopt, 1));
      break;
    case Protocol::SqueezedVacuum:
      out.model.squeezing = number_field(params, "s", "params.s", std::nullopt);
      out.model.pool_size = static_cast<int>(int_field(params, "n_pool", "params.n_pool", 1, 1));
      break;
  }

  if (const json* prior = find_field(config, "prior")) {
    if (!prior->is_object()) throw ConfigError("field 'prior': expected an object");
    if (!prior->contains("lo") || !prior->contains("hi")) {
      throw ConfigError("field 'prior': needs 'lo' and 'hi'");
    }
    out.prior.lo = parse_angle(prior->at("lo"), "prior.lo");
    out.prior.hi = parse_angle(prior->at("hi"), "prior.hi");
    const bool full = std::fabs(out.prior.hi - out.prior.lo - 2.0 * kPi) <= 1e-9;
    const auto topology = string_field(*prior, "topology", "prior.topology",
                                       std::string(full ? "circular" : "linear"));
    if (topology == "circular") {
      out.prior.topology = bayes::Topology::Circular;
    } else if (topology == "linear") {
      out.prior.topology = bayes::Topology::Linear;
    } else {
      throw ConfigError("field 'prior.topology': expected circular|linear");
    }
  }

  if (const json* phase = find_field(config, "true_phase")) out.true_phase = parse_angle(*phase, "true_phase");
  out.repetitions = int_field(config, "n", "n", 1, 1);
  out.trials = int_field(config, "trials", "trials", 1, 1);
  out.grid_size = static_cast<int>(int_field(config, "grid_size", "grid_size", bayes::kDefaultGridSize, 33));
  if (const json* seed = find_field(config, "seed")) {
    if (!seed->is_number_unsigned()) throw ConfigError("field 'seed': expected a non-negative integer");
    out.master_seed = seed->get<std::uint64_t>();
  }
  try {
    out.estimator = harness::parse_estimator(
        string_field(config, "estimator", "estimator", std::string("posterior_mean")));
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("field 'estimator': {}", e.what()));
  }
  if (const json* y = find_field(config, "yield")) {
    out.p_gen = number_field(*y, "p_gen", "yield.p_gen", 1.0);
    out.eta_coup = number_field(*y, "eta_coup", "yield.eta_coup", 1.0);
    out.eta_det = number_field(*y, "eta_det", "yield.eta_det", 1.0);
  }

  try {
    out.validate();
    (void)out.model.build();
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("invalid scenario: {}", e.what()));
  }
  return out;
}

std::string canonical_text(const json& config) { return config.dump(); }

std::string config_digest(const json& config) {
  const std::string text = canonical_text(config);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), md.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

RunManifest make_manifest(const json& config, const Options& options, std::vector<std::string> outputs) {
  RunManifest m;
  m.config_digest = config_digest(config);
  m.master_seed = config.at("seed").get<std::uint64_t>();
  m.outputs = std::move(outputs);
  if (!options.no_timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    m.timestamp = buf;
  }
  return m;
}

json to_json(const RunManifest& manifest) {
  json out = {{"config_digest", manifest.config_digest},
              {"artifact_version", manifest.artifact_version},
              {"master_seed", manifest.master_seed},
              {"outputs", manifest.outputs}};
  if (manifest.timestamp) out["timestamp"] = *manifest.timestamp;
  return out;
}

}  // namespace qsense::cli

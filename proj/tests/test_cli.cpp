#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qsense/cli.hpp"

using namespace qsense;
using namespace qsense::cli;
using nlohmann::json;
using numerics::kPi;

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::vector<std::vector<std::string>> body(const std::string& text) {
  auto rows = read_csv(text);
  rows.erase(rows.begin());
  return rows;
}

json base_config(const std::string& protocol) {
  json c = json::parse(R"({"seed": 11, "trials": 4, "grid_size": 513})");
  c["protocol"] = protocol;
  return c;
}

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "qsense_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

int run_tool(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + QSENSE_TOOL + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing diagnostics") {
  try {
    parse_config_text("{\n  \"protocol\": \"mz\",\n  \"seed\": ,\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("[1, 2]"), ConfigError);

  try {
    scenario_from_json(json::parse(R"({"protocol": "noon", "params": {"N": "four"}, "seed": 1})"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("params.N") != std::string::npos);
  }
  CHECK_THROWS_AS(scenario_from_json(json::parse(R"({"protocol": "sagnac", "seed": 1})")), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(json::parse(R"({"protocol": "mz", "grid_size": 64, "seed": 1})")), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(json::parse(R"({"protocol": "mz", "prior": {"lo": 0}, "seed": 1})")), ConfigError);

  Options o;
  CHECK_THROWS_AS(apply_overrides(json::parse(R"({"protocol": "mz"})"), o), ConfigError);
  o.seed = 99;
  CHECK(apply_overrides(json::parse(R"({"protocol": "mz", "seed": 1})"), o)["seed"] == 99);
}

TEST_CASE("angle parsing") {
  CHECK(parse_angle(json(0.25), "x") == 0.25);
  CHECK(parse_angle(json("pi"), "x") == doctest::Approx(kPi));
  CHECK(parse_angle(json("-pi/4"), "x") == doctest::Approx(-kPi / 4));
  CHECK(parse_angle(json("2*pi/3"), "x") == doctest::Approx(2 * kPi / 3));
  CHECK(parse_angle(json("0.5pi"), "x") == doctest::Approx(kPi / 2));
  CHECK(parse_angle(json("1.5"), "x") == 1.5);
  CHECK_THROWS_AS(parse_angle(json("tau"), "x"), ConfigError);
  CHECK_THROWS_AS(parse_angle(json("pi/0"), "x"), ConfigError);
  CHECK_THROWS_AS(parse_angle(json::array(), "x"), ConfigError);
}

TEST_CASE("scenario mapping") {
  const auto c = scenario_from_json(json::parse(R"({
    "protocol": "hb", "params": {"j": 3, "mode": "bessel"},
    "prior": {"lo": "-pi/2", "hi": "pi/2"}, "true_phase": 0.1, "n": 5, "trials": 9,
    "grid_size": 257, "seed": 4, "estimator": "map", "yield": {"p_gen": 0.5}})"));
  CHECK(c.model.protocol == models::Protocol::HollandBurnettBessel);
  CHECK(c.model.j == 3);
  CHECK(c.prior.topology == bayes::Topology::Linear);
  CHECK(c.prior.hi == doctest::Approx(kPi / 2));
  CHECK(c.repetitions == 5);
  CHECK(c.trials == 9);
  CHECK(c.estimator == harness::Estimator::Map);
  CHECK(c.p_gen == 0.5);
  CHECK(c.eta_det == 1.0);
  const auto full = scenario_from_json(json::parse(R"({"protocol": "mz", "prior": {"lo": "-pi", "hi": "pi"}, "seed": 0})"));
  CHECK(full.prior.topology == bayes::Topology::Circular);
}

TEST_CASE("digest round trip") {
  const json a = json::parse(R"({"seed": 3, "protocol": "mz", "n": 10})");
  const json b = json::parse(R"({"n": 10, "protocol": "mz", "seed": 3})");
  CHECK(config_digest(a) == config_digest(b));
  CHECK(config_digest(a) == config_digest(json::parse(canonical_text(a))));
  CHECK(config_digest(a).size() == 64);
  json c = a;
  c["n"] = 11;
  CHECK(config_digest(a) != config_digest(c));
  CHECK(config_digest(json::parse("{}")) == "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a");
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_number(16.0) == "16");
  CHECK(format_number(INFINITY) == "inf");
  std::ostringstream out;
  CsvWriter w(out, {"a", "b"});
  w.row({1.5, 2.0});
  CHECK(out.str() == "a,b\n1.5,2\n");
  CHECK_THROWS(w.row({1.0}));
}

TEST_CASE("fisher command") {
  json cfg = base_config("noon");
  cfg["params"] = {{"N", 4}};
  cfg["phi_range"] = {{"lo", 0.1}, {"hi", 0.7}, {"points", 7}};
  std::ostringstream out;
  cmd_fisher(cfg, {}, out);
  const auto rows = read_csv(out.str());
  REQUIRE(rows.size() == 8);
  CHECK(rows[0] == std::vector<std::string>{"phi", "fisher", "qfi", "cr_bound"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][1]) == doctest::Approx(16.0).epsilon(1e-9));
    CHECK(std::stod(rows[i][3]) == doctest::Approx(1.0 / 16).epsilon(1e-9));
  }
  CHECK(out.str().find('\r') == std::string::npos);

  json mz = base_config("mz");
  mz["phi_range"] = {{"lo", 0.2}, {"hi", 2.9}, {"points", 5}};
  std::ostringstream m;
  cmd_fisher(mz, {}, m);
  for (const auto& r : body(m.str())) {
    CHECK(std::stod(r[1]) == doctest::Approx(1.0).epsilon(1e-9));
  }

  json sq = base_config("squeezed-vacuum");
  sq["params"] = {{"s", 1.0}};
  sq["phi_range"] = {{"lo", 0.2}, {"hi", 1.2}, {"points", 3}};
  std::ostringstream s;
  cmd_fisher(sq, {}, s);
  for (const auto& r : body(s.str())) {
    CHECK(std::stod(r[2]) == doctest::Approx(26.3082).epsilon(1e-5));
  }
}

TEST_CASE("posterior command") {
  json cfg = base_config("noon");
  cfg["params"] = {{"N", 4}};
  cfg["prior"] = {{"lo", "-pi/4"}, {"hi", "pi/4"}};
  cfg["data"] = {0, 0};
  std::ostringstream out;
  cmd_posterior(cfg, {}, out);
  auto rows = read_csv(out.str());
  REQUIRE(rows.size() == 514);
  // density proportional to cos^4(2 phi); the centre node is the peak
  const double peak = std::stod(rows[257][2]);
  for (std::size_t i = 1; i < rows.size(); i += 8) {
    const double phi = std::stod(rows[i][0]);
    const double c = std::cos(2 * phi);
    CHECK(std::fabs(std::stod(rows[i][2]) - peak * c * c * c * c) < 1e-9);
  }

  cfg["data"] = json::array();
  std::ostringstream empty;
  cmd_posterior(cfg, {}, empty);
  for (const auto& r : body(empty.str())) {
    CHECK(std::stod(r[1]) == std::stod(r[2]));
  }

  json mz = base_config("mz");
  mz["data"] = {0, 0, 0, 0};
  std::ostringstream m;
  cmd_posterior(mz, {}, m);
  rows = read_csv(m.str());
  const double mpeak = std::stod(rows[257][2]);
  for (std::size_t i = 1; i < rows.size(); i += 8) {
    const double c = std::cos(std::stod(rows[i][0]) / 2);
    CHECK(std::fabs(std::stod(rows[i][2]) - mpeak * std::pow(c, 8)) < 1e-9);
  }

  cfg["data"] = {0, 2};
  std::ostringstream bad;
  CHECK_THROWS_AS(cmd_posterior(cfg, {}, bad), ConfigError);
}

TEST_CASE("sweep and report commands") {
  json hb = {{"seed", 1}, {"trials", 10}, {"grid_size", 1025}, {"sweep", {{"N_total", 64}}}};
  std::ostringstream out;
  const auto summary = cmd_sweep("hb-repetition", hb, {}, out);
  CHECK(summary["optimum_n"] == 4);
  CHECK(read_csv(out.str()).size() == 6);
  std::ostringstream ignored;
  CHECK_THROWS_AS(cmd_sweep("spiral", hb, {}, ignored), ConfigError);

  json scaling = base_config("mz");
  scaling["prior"] = {{"lo", 0}, {"hi", "pi"}};
  scaling["true_phase"] = 1.0;
  scaling["trials"] = 400;
  scaling["sweep"] = {{"N_values", {64, 128, 256, 512}}};
  std::ostringstream s;
  CHECK(cmd_sweep("scaling", scaling, {}, s)["exponent"].get<double>() == doctest::Approx(-1.0).epsilon(0.2));

  json noon = base_config("noon");
  noon["params"] = {{"N", 1}};
  noon["sweep"] = {{"N_values", {8, 16, 32}}, {"metric", "posterior_variance"}, {"restrict_prior", true}};
  std::ostringstream n;
  CHECK(cmd_sweep("scaling", noon, {}, n)["exponent"].get<double>() == doctest::Approx(-2.0).epsilon(0.05));

  json cmp = {{"seed", 2}, {"trials", 5}, {"grid_size", 1025}, {"sweep", {{"N", 8}}}};
  std::ostringstream c;
  const auto cs = cmd_sweep("noon-vs-mz", cmp, {}, c);
  CHECK(cs["cases"]["mz"]["info_gain"].get<double>() > cs["cases"]["noon"]["info_gain"].get<double>());
  CHECK(read_csv(c.str()).size() == 5);

  Options quiet;
  quiet.no_timestamp = true;
  json exp = base_config("mz");
  exp["n"] = 12;
  const auto r1 = cmd_report(exp, quiet);
  const auto r2 = cmd_report(exp, quiet);
  CHECK(r1.dump() == r2.dump());
  CHECK(r1["schema_version"] == kSchemaVersion);
  CHECK(r1["manifest"]["config_digest"] == config_digest(exp));
  CHECK_FALSE(r1["manifest"].contains("timestamp"));
  CHECK(r1["result"]["ledger"]["total"] == 12.0);
  CHECK(r1["result"]["records"].size() == 4);
  CHECK(cmd_report(exp, {})["manifest"].contains("timestamp"));

  json chi = {{"seed", 5}, {"scenario", "chi2-demo"}, {"chi2", {{"s", 1.0}, {"n", 10}, {"trials", 1000}}}};
  const auto cr = cmd_report(chi, quiet);
  CHECK(cr["result"].contains("relative_variance"));
  CHECK(cr["result"]["classical_reference"].get<double>() == doctest::Approx(1.0 / 19));

  json matched = {{"seed", 5}, {"scenario", "matched-squeezed"}, {"matched", {{"s", 1.0}, {"estimates", 100}}}};
  CHECK(cmd_report(matched, quiet)["result"]["alpha_sq"].get<double>() == doctest::Approx(std::exp(2.0) / 4));
  json unknown = {{"seed", 5}, {"scenario", "teleport"}};
  CHECK_THROWS_AS(cmd_report(unknown, quiet), ConfigError);
}

TEST_CASE("command-line tool") {
  const auto dir = scratch_dir();
  const auto cfg = dir / "noon.json";
  {
    std::ofstream(cfg) << R"({"protocol": "noon", "params": {"N": 4}, "prior": {"lo": "-pi/4", "hi": "pi/4"},
      "trials": 20, "grid_size": 257, "seed": 3, "phi_range": {"lo": 0.1, "hi": 0.5, "points": 3}})";
  }
  const auto bad = dir / "bad.json";
  { std::ofstream(bad) << "{\"protocol\": \"noon\",\n \"seed\": }"; }
  const auto unseeded = dir / "unseeded.json";
  { std::ofstream(unseeded) << R"({"protocol": "mz"})"; }
  const auto hb = dir / "hb.json";
  { std::ofstream(hb) << R"({"seed": 1, "trials": 5, "grid_size": 1025, "sweep": {"N_total": 64}})"; }

  CHECK(run_tool("fisher --config " + cfg.string() + " --out " + (dir / "f.csv").string()) == 0);
  CHECK(slurp(dir / "f.csv").rfind("phi,fisher,qfi,cr_bound\n", 0) == 0);
  CHECK(run_tool("fisher --config " + bad.string()) == 2);
  CHECK(run_tool("fisher --config " + unseeded.string()) == 2);
  CHECK(run_tool("fisher --config " + unseeded.string() + " --seed 5") == 0);
  CHECK(run_tool("fisher --config " + (dir / "missing.json").string()) == 2);
  CHECK(run_tool("warp --config " + cfg.string()) == 2);
  CHECK(run_tool("fisher") == 2);
  CHECK(run_tool("--help") == 0);

  // relative output paths resolve against the output-directory variable
  const auto outdir = dir / "outputs";
  std::filesystem::remove_all(outdir);
  CHECK(run_tool("report --no-timestamp --threads 2 --config " + cfg.string() + " --out r1.json",
                 "QSENSE_OUTPUT_DIR=" + outdir.string()) == 0);
  CHECK(run_tool("report --no-timestamp --config " + cfg.string() + " --out r2.json",
                 "QSENSE_OUTPUT_DIR=" + outdir.string()) == 0);
  CHECK(slurp(outdir / "r1.json").size() > 100);
  const auto r1 = json::parse(slurp(outdir / "r1.json"));
  const auto r2 = json::parse(slurp(outdir / "r2.json"));
  CHECK(r1["result"] == r2["result"]);
  CHECK(r1["manifest"]["config_digest"] == r2["manifest"]["config_digest"]);

  // output directory cannot be created: the parent is a regular file
  CHECK(run_tool("fisher --config " + cfg.string() + " --out " + (cfg / "f.csv").string()) == 3);
  CHECK(run_tool("sweep hb-repetition --config " + hb.string() + " --out " + (dir / "s.csv").string()) == 0);
  CHECK(json::parse(slurp(dir / "s.csv.summary.json"))["optimum_n"] == 4);
}

}  // TEST_SUITE

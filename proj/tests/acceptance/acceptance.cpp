// Acceptance checks. Each criterion prints one line:
//   criterion <k>: PASS|FAIL  <title>  (<details>)  [<seconds> s]
// Usage: qsense_acceptance [k ...]   (no arguments runs all of them)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "../oracles.hpp"
#include "qsense/bayes.hpp"
#include "qsense/harness.hpp"
#include "qsense/information.hpp"
#include "qsense/models.hpp"

using namespace qsense;
using models::PhaseModel;
using numerics::kPi;

namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;

struct Outcome {
  bool pass;
  std::string details;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit;  // seconds; 0 for none
  std::function<Outcome()> check;
};

int worker_count() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Outcome fisher_closed_forms() {
  double worst = 0.0;
  for (int n : {1, 2, 4, 8, 16}) {
    const auto parity = PhaseModel::noon_parity(n);
    const auto full = PhaseModel::noon_full(n);
    for (int i = 1; i <= 10; ++i) {
      const double phi = (kPi / n) * i / 11.0;
      const double target = static_cast<double>(n) * n;
      const double closed = information::classical_fisher(parity, phi).value;
      const double numeric = information::classical_fisher(parity, phi, information::FisherMethod::Numeric).value;
      const double multinomial = information::classical_fisher(full, phi, information::FisherMethod::Numeric).value;
      worst = std::max({worst, std::fabs(closed / target - 1), std::fabs(numeric / target - 1),
                        std::fabs(multinomial / numeric - 1)});
    }
  }
  const auto mz = PhaseModel::mach_zehnder();
  for (int i = 1; i <= 10; ++i) {
    const double phi = kPi * i / 11.0;
    worst = std::max({worst, std::fabs(information::classical_fisher(mz, phi).value - 1),
                      std::fabs(information::classical_fisher(mz, phi, information::FisherMethod::Numeric).value - 1)});
  }
  return {worst < 1e-6, fmt::format("max relative deviation {:.3g}, tolerance 1e-6", worst)};
}

Outcome qfi_formulas() {
  // machine precision: at most two ulps from the directly evaluated formula
  auto ulps = [](double a, double b) { return std::fabs(a - b) / (std::numeric_limits<double>::epsilon() * std::fabs(b)); };
  double worst = 0.0;
  for (int n = 1; n <= 64; ++n) worst = std::max(worst, ulps(information::qfi_noon(n), double(n) * n));
  for (int j = 1; j <= 40; ++j) worst = std::max(worst, ulps(information::qfi_hb(j), 2.0 * j * (j + 1)));
  bool zero_ok = information::qfi_squeezed_vacuum(0.0) == 0.0;
  for (int i = 1; i <= 300; ++i) {
    const double s = i / 100.0;
    const double sh = std::sinh(2 * s);
    worst = std::max(worst, ulps(information::qfi_squeezed_vacuum(s), 2 * sh * sh));
  }
  return {zero_ok && worst <= 2.0, fmt::format("max deviation {:.2g} ulp over N<=64, j<=40, s<=3", worst)};
}

Outcome noon_prior_dominated() {
  std::vector<information::ResourcePoint> points;
  std::string details;
  bool band_ok = true;
  for (int n : {8, 16, 32}) {
    harness::ScenarioConfig c;
    c.model.protocol = models::Protocol::NoonParity;
    c.model.photons = n;
    c.prior = bayes::PriorSpec::symmetric(kPi / n);
    c.true_phase = 0.0;
    c.trials = 2000;
    c.master_seed = 3;
    const auto r = harness::run_experiment(c, worker_count());
    const double target = kPi * kPi / (3.0 * n * n);
    const double ratio = r.mean_posterior_variance / target;
    band_ok = band_ok && std::fabs(ratio - 1.0) <= 0.2;
    details += fmt::format("N={} var/(pi^2/3N^2)={:.4f}; ", n, ratio);
    points.push_back({double(n), r.mean_posterior_variance});
  }
  const double slope = information::scaling_exponent(points);
  const bool slope_ok = std::fabs(slope + 2.0) <= 0.15;
  details += fmt::format("exponent {:.4f} ({}); 20% band {}", slope, slope_ok ? "ok" : "out",
                         band_ok ? "ok" : "missed");
  return {band_ok && slope_ok, details};
}

Outcome dispersion_baseline() {
  double worst = 0.0;
  for (int n = 2; n <= 64; ++n) {
    const auto g = bayes::make_grid(bayes::PriorSpec::symmetric(kPi / n), 32769);
    const double s = numerics::sinc(kPi / n);
    worst = std::max(worst, std::fabs(bayes::circular_dispersion(g) - (1.0 - s * s)));
  }
  return {worst < 1e-8, fmt::format("max |D^2 - (1 - sinc^2(pi/N))| = {:.3g} on 32769 nodes", worst)};
}

Outcome information_asymmetry() {
  // oracle: KL of cos^2(N phi/2) on (-pi/N, pi/N) vs uniform; N-free by scaling
  const long double noon_oracle = oracle::simpson(
      [](long double u) {
        const long double p = 2.0L * std::pow(std::cos(u), 2);  // density w.r.t. uniform on (-pi/2, pi/2)
        return p <= 0 ? 0.0L : p * std::log(p) / kPiL;
      },
      -kPiL / 2, kPiL / 2);
  std::vector<double> noon_gains;
  double noon_oracle_gap = 0.0, mz_oracle_gap = 0.0;
  bool mz_wins = true;
  std::string details;
  for (int n : {2, 4, 8, 16}) {
    const auto r = harness::noon_vs_mz_comparison(n, bayes::kDefaultGridSize, 4, 1, worker_count());
    noon_gains.push_back(r.noon.info_gain);
    noon_oracle_gap = std::max(noon_oracle_gap, std::fabs(r.noon.info_gain - static_cast<double>(noon_oracle)));
    const long double z = oracle::simpson([n](long double x) { return std::pow(std::cos(0.5L * x), 2 * n); }, -kPiL, kPiL);
    const long double mz_oracle = oracle::simpson(
        [n, z](long double x) {
          const long double p = std::pow(std::cos(0.5L * x), 2 * n) / z;
          return p <= 0 ? 0.0L : p * std::log(p * 2 * kPiL);
        },
        -kPiL, kPiL);
    mz_oracle_gap = std::max(mz_oracle_gap, std::fabs(r.mz.info_gain - static_cast<double>(mz_oracle)));
    if (n >= 4) mz_wins = mz_wins && r.mz.info_gain > r.noon.info_gain;
    details += fmt::format("N={} noon {:.6f} mz {:.6f}; ", n, r.noon.info_gain, r.mz.info_gain);
  }
  const auto [lo, hi] = std::minmax_element(noon_gains.begin(), noon_gains.end());
  const double spread = *hi - *lo;
  details += fmt::format("noon spread {:.2g}, oracle gaps {:.2g}/{:.2g}", spread, noon_oracle_gap, mz_oracle_gap);
  return {spread < 1e-6 && mz_wins && noon_oracle_gap < 1e-6 && mz_oracle_gap < 1e-6, details};
}

Outcome hb_optimum() {
  harness::HbSweepSpec spec;  // N = 64, n in {1,2,4,8,16}, exact, prior (-pi/2, pi/2), T = 2000
  spec.master_seed = 1;
  const auto r = harness::hb_repetition_sweep(spec, worker_count());
  std::string details;
  const harness::HbSweepRow* best = nullptr;
  for (const auto& row : r.rows) {
    details += fmt::format("n={} var={:.5g}; ", row.repetitions, row.mean_posterior_variance);
    if (best == nullptr || row.mean_posterior_variance < best->mean_posterior_variance) best = &row;
  }
  const bool located = r.optimum_repetitions == 4;
  const double factor = best->mean_posterior_variance / best->cr_reference;
  details += fmt::format("minimum at n={}, {:.3f} x bound 1/(N(j+1))", r.optimum_repetitions, factor);
  return {located && factor <= 2.0, details};
}

Outcome hb_bessel_oracle() {
  const int j = 20;
  double worst = 0.0, where = 0.0;
  int worst_q = 0;
  for (int i = 0; i <= 400; ++i) {
    const double jt = 2.0 * i / 400;
    const auto exact = models::hb_exact_pmf(j, jt / j);
    for (int q = -2; q <= 2; ++q) {
      const double gap = std::fabs(exact[j + q] - models::hb_bessel_pmf(j, jt / j, q));
      if (gap > worst) {
        worst = gap;
        where = jt;
        worst_q = q;
      }
    }
  }
  return {worst < 5e-3, fmt::format("max gap {:.4g} at j*theta={:.3f}, q={}, tolerance 5e-3", worst, where, worst_q)};
}

Outcome matched_scaling() {
  bool ok = true;
  std::string details;
  for (double s : {1.0, 1.5, 2.0, 3.0}) {
    harness::MatchedSqueezedSpec spec;
    spec.squeezing = s;
    spec.estimates = 100000;
    spec.master_seed = 8;
    const auto r = harness::matched_squeezed_analysis(spec);
    const double alpha_err = std::fabs(r.alpha_sq / (std::exp(2 * s) / 4) - 1);
    const double ratio = r.predicted_variance / r.heisenberg_variance;
    const double z = std::fabs(r.empirical_variance - r.predicted_per_estimate) / r.empirical_standard_error;
    bool row_ok = z < 5.0;
    if (s <= 2.0) row_ok = row_ok && alpha_err < 1e-12;
    if (s == 2.0) row_ok = row_ok && std::fabs(ratio - 1) <= 0.15;
    if (s == 3.0) row_ok = row_ok && std::fabs(ratio - 1) <= 0.05;
    ok = ok && row_ok;
    details += fmt::format("s={} ratio {:.4f} MC z {:.2f}; ", s, ratio, z);
  }
  details.resize(details.size() - 2);
  return {ok, details};
}

Outcome chi2_scaling() {
  bool ok = true;
  std::string details;
  for (int n : {5, 10, 25}) {
    const auto r = harness::chi2_phase_demo(1.0, n, 0.0, 100000, 9);
    const double z = (r.relative_variance - r.classical_reference) / r.relative_variance_standard_error;
    const bool row_ok = std::fabs(z) < 5.0 && r.naive_qfi_variance < r.relative_variance;
    ok = ok && row_ok;
    details += fmt::format("n={} rel.var {:.5f} vs 1/(2n-1) {:.5f} ({:+.1f} SE; exact {:.5f}); ", n,
                           r.relative_variance, r.classical_reference, z, r.exact_relative_variance);
  }
  details.resize(details.size() - 2);
  return {ok, details};
}

Outcome property_suites() {
  const std::string cmd = std::string(QSENSE_UNIT_TESTS) + " --no-intro=true --minimal=true";
  const int status = std::system(cmd.c_str());
  return {status == 0, status == 0 ? "unit and property suites green" : "unit/property suite failures (see above)"};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "Fisher closed forms", 5, fisher_closed_forms},
      {2, "QFI formulas", 0, qfi_formulas},
      {3, "NOON prior-dominated resolution", 60, noon_prior_dominated},
      {4, "dispersion baseline", 0, dispersion_baseline},
      {5, "information-update asymmetry", 30, information_asymmetry},
      {6, "Holland-Burnett optimum", 300, hb_optimum},
      {7, "Holland-Burnett exact vs Bessel", 0, hb_bessel_oracle},
      {8, "matched bright-squeezed scaling", 60, matched_scaling},
      {9, "chi-square classical scaling", 60, chi2_scaling},
      {10, "property suites", 600, property_suites},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      out.pass = false;
      out.details += fmt::format("; over the {:.0f} s limit", c.time_limit);
    }
    std::printf("criterion %d: %s  %s  (%s)  [%.2f s]\n", c.id, out.pass ? "PASS" : "FAIL", c.title.c_str(),
                out.details.c_str(), secs);
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

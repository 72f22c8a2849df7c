#include "qsense/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hb_propagator.hpp"
#include "qsense/errors.hpp"

namespace qsense::models {

using numerics::kPi;

namespace {

constexpr int kMaxExactJ = 40;

void require_photons(int photons) {
  if (photons < 1) throw DomainError("photon number must be >= 1");
}

void require_j(int j) {
  if (j < 1) throw DomainError("Holland-Burnett j must be >= 1");
}

}  // namespace

std::string_view protocol_name(Protocol protocol) {
  switch (protocol) {
    case Protocol::NoonFull: return "noon-full";
    case Protocol::NoonParity: return "noon-parity";
    case Protocol::MachZehnder: return "mz";
    case Protocol::HollandBurnettBessel: return "hb-bessel";
    case Protocol::HollandBurnettExact: return "hb-exact";
    case Protocol::SqueezedVacuum: return "squeezed-vacuum";
  }
  return "unknown";
}

Protocol parse_protocol(std::string_view name) {
  for (Protocol p : {Protocol::NoonFull, Protocol::NoonParity, Protocol::MachZehnder,
                     Protocol::HollandBurnettBessel, Protocol::HollandBurnettExact,
                     Protocol::SqueezedVacuum}) {
    if (protocol_name(p) == name) return p;
  }
  if (name == "noon") return Protocol::NoonParity;
  throw DomainError("unknown protocol '" + std::string(name) + "'");
}

SqueezedVacuumParams SqueezedVacuumParams::from_squeezing(double s, int pool_size) {
  if (!(s >= 0.0)) throw DomainError("squeezing parameter must be >= 0");
  if (pool_size < 1) throw DomainError("pool size must be >= 1");
  return {s, 0.5 * std::exp(2.0 * s), 0.5 * std::exp(-2.0 * s), pool_size};
}

double BrightSqueezedParams::mean_photons() const {
  const double sh = std::sinh(squeezing);
  return alpha * alpha + sh * sh;
}

double clamp_probability(double p) {
  if (p >= 0.0) return p;
  if (p >= -1e-15) return 0.0;
  throw ConsistencyError("probability " + std::to_string(p) + " below rounding tolerance");
}

double noon_full_pmf(int photons, double phi, int k) {
  require_photons(photons);
  if (k < 0 || k > photons) throw DomainError("noon_full_pmf: k outside {0..N}");
  const double sign = ((photons - k) % 2 == 0) ? 1.0 : -1.0;
  const double weight = std::exp(numerics::log_binomial(photons, k) - photons * std::log(2.0));
  return clamp_probability(weight * (1.0 + sign * std::cos(photons * phi)));
}

ParityPair noon_parity_pmf(int photons, double phi) {
  require_photons(photons);
  const double c = std::cos(0.5 * photons * phi);
  const double s = std::sin(0.5 * photons * phi);
  return {c * c, s * s};
}

ParityPair mz_pmf(double phi) {
  const double c = std::cos(0.5 * phi);
  const double s = std::sin(0.5 * phi);
  return {c * c, s * s};
}

double hb_bessel_pmf(int j, double theta, int q) {
  require_j(j);
  if (std::abs(q) > j) throw DomainError("hb_bessel_pmf: |q| > j");
  const double value = numerics::bessel_j(q, j * theta);
  return value * value;
}

std::vector<double> hb_exact_pmf(int j, double theta) {
  if (j < 1 || j > kMaxExactJ) throw DomainError("hb_exact_pmf: j must lie in [1, 40]");
  if (!std::isfinite(theta)) throw DomainError("hb_exact_pmf: non-finite phase");
  return HbPropagator(j).probabilities(theta);
}

double quadrature_variance(double v_plus, double v_minus, double theta) {
  if (!(v_plus > 0.0) || !(v_minus > 0.0)) {
    throw DomainError("quadrature_variance: variances must be positive");
  }
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return v_plus * c * c + v_minus * s * s;
}

double chi2_loglik(double y, int n, double theta, const SqueezedVacuumParams& params) {
  if (!(y > 0.0)) throw DomainError("chi2_loglik: y must be positive");
  if (n < 1) throw DomainError("chi2_loglik: n must be >= 1");
  const double v = quadrature_variance(params.v_plus, params.v_minus, theta);
  const double half_n = 0.5 * n;
  return (half_n - 1.0) * std::log(y) - y / (2.0 * v) - half_n * std::log(2.0) -
         numerics::log_gamma(half_n) - half_n * std::log(v);
}

double sqrt_transform_loglik(double y, int n, double theta, const SqueezedVacuumParams& params) {
  if (!(y > 0.0)) throw DomainError("sqrt_transform_loglik: y must be positive");
  if (n < 2) throw DomainError("sqrt_transform_loglik: n must be >= 2");
  const double v = quadrature_variance(params.v_plus, params.v_minus, theta);
  const double gap = std::sqrt(2.0 * y) - std::sqrt((2.0 * n - 1.0) * v);
  return -0.5 * std::log(v) - gap * gap / (2.0 * v);
}

double chi2_sample(numerics::RandomStream& stream, int n, double variance) {
  if (n < 1) throw DomainError("chi2_sample: n must be >= 1");
  if (!(variance > 0.0)) throw DomainError("chi2_sample: variance must be positive");
  double y = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = stream.normal();
    y += z * z;
  }
  return variance * y;
}

double xi_estimator(double y, int n) {
  if (!(y >= 0.0)) throw DomainError("xi_estimator: y must be >= 0");
  if (n < 1) throw DomainError("xi_estimator: n must be >= 1");
  return std::sqrt(2.0 * y / (2.0 * n - 1.0));
}

double bright_homodyne_sample(numerics::RandomStream& stream, const BrightSqueezedParams& params,
                              double phi_true, double lo_angle) {
  const double mean = std::sqrt(2.0) * params.alpha * std::cos(phi_true - lo_angle);
  const double v_plus = 0.5 * std::exp(2.0 * params.squeezing);
  const double v_minus = 0.5 * std::exp(-2.0 * params.squeezing);
  const double variance = quadrature_variance(v_plus, v_minus, lo_angle - phi_true);
  return stream.normal(mean, variance);
}

// ---------------------------------------------------------------------------

DiscreteSampler::DiscreteSampler(std::span<const double> weights) : cumulative_(weights.size()) {
  std::partial_sum(weights.begin(), weights.end(), cumulative_.begin());
  if (cumulative_.empty() || !(cumulative_.back() > 0.0)) {
    throw DomainError("DiscreteSampler: weights must have positive total");
  }
}

std::size_t DiscreteSampler::draw(numerics::RandomStream& stream) const {
  const double target = stream.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  // Skip zero-weight trailing labels if rounding lands on the total.
  auto index = static_cast<std::size_t>(std::min(it, cumulative_.end() - 1) - cumulative_.begin());
  while (index > 0 && cumulative_[index] == cumulative_[index - 1]) --index;
  return index;
}

// ---------------------------------------------------------------------------

PhaseModel::PhaseModel(Protocol protocol,
                       std::variant<NoonParams, HbParams, SqueezedVacuumParams> params)
    : protocol_(protocol), params_(params) {}

PhaseModel PhaseModel::noon_full(int photons) {
  require_photons(photons);
  PhaseModel model(Protocol::NoonFull, NoonParams{photons});
  model.labels_.resize(photons + 1);
  std::iota(model.labels_.begin(), model.labels_.end(), 0);
  return model;
}

PhaseModel PhaseModel::noon_parity(int photons) {
  require_photons(photons);
  PhaseModel model(Protocol::NoonParity, NoonParams{photons});
  model.labels_ = {0, 1};
  return model;
}

PhaseModel PhaseModel::mach_zehnder() {
  PhaseModel model(Protocol::MachZehnder, NoonParams{1});
  model.labels_ = {0, 1};
  return model;
}

PhaseModel PhaseModel::holland_burnett(HbParams params) {
  require_j(params.j);
  const bool exact = params.mode == HbMode::Exact;
  if (exact && params.j > kMaxExactJ) throw DomainError("exact Holland-Burnett model needs j <= 40");
  PhaseModel model(exact ? Protocol::HollandBurnettExact : Protocol::HollandBurnettBessel, params);
  model.labels_.resize(2 * params.j + 1);
  std::iota(model.labels_.begin(), model.labels_.end(), -params.j);
  if (exact) model.hb_ = std::make_shared<const HbPropagator>(params.j);
  return model;
}

PhaseModel PhaseModel::squeezed_vacuum(SqueezedVacuumParams params) {
  if (!(params.squeezing > 0.0)) throw DomainError("squeezed-vacuum model needs s > 0");
  if (params.pool_size < 1) throw DomainError("pool size must be >= 1");
  if (!(params.v_plus > 0.0) || !(params.v_minus > 0.0)) {
    throw DomainError("quadrature variances must be positive");
  }
  return PhaseModel(Protocol::SqueezedVacuum, params);
}

int PhaseModel::photons() const {
  if (const auto* p = std::get_if<NoonParams>(&params_)) return p->photons;
  throw DomainError("model has no photon-number parameter");
}

const HbParams& PhaseModel::hb_params() const {
  if (const auto* p = std::get_if<HbParams>(&params_)) return *p;
  throw DomainError("model is not Holland-Burnett");
}

const SqueezedVacuumParams& PhaseModel::squeezed_params() const {
  if (const auto* p = std::get_if<SqueezedVacuumParams>(&params_)) return *p;
  throw DomainError("model is not squeezed vacuum");
}

double PhaseModel::resource_cost() const {
  switch (protocol_) {
    case Protocol::NoonFull:
    case Protocol::NoonParity:
      return photons();
    case Protocol::MachZehnder:
      return 1.0;
    case Protocol::HollandBurnettBessel:
    case Protocol::HollandBurnettExact:
      return 2.0 * hb_params().j;
    case Protocol::SqueezedVacuum: {
      const auto& p = squeezed_params();
      const double sh = std::sinh(p.squeezing);
      return p.pool_size * sh * sh;
    }
  }
  return 0.0;
}

bool PhaseModel::in_domain(double phi) const { return std::isfinite(phi); }

std::size_t PhaseModel::outcome_index(double outcome) const {
  const double rounded = std::round(outcome);
  if (labels_.empty() || rounded != outcome || rounded < labels_.front() ||
      rounded > labels_.back()) {
    throw DomainError("outcome " + std::to_string(outcome) + " not in the outcome space of " +
                      std::string(name()));
  }
  return static_cast<std::size_t>(rounded - labels_.front());
}

std::vector<double> PhaseModel::pmf(double phi) const {
  if (!in_domain(phi)) throw DomainError("phase outside model validity domain");
  switch (protocol_) {
    case Protocol::NoonFull: {
      std::vector<double> p(labels_.size());
      for (std::size_t k = 0; k < p.size(); ++k) p[k] = noon_full_pmf(photons(), phi, static_cast<int>(k));
      return p;
    }
    case Protocol::NoonParity: {
      const auto pair = noon_parity_pmf(photons(), phi);
      return {pair.even, pair.odd};
    }
    case Protocol::MachZehnder: {
      const auto pair = mz_pmf(phi);
      return {pair.even, pair.odd};
    }
    case Protocol::HollandBurnettBessel: {
      const int j = hb_params().j;
      std::vector<double> p(labels_.size());
      for (int q = -j; q <= j; ++q) p[q + j] = hb_bessel_pmf(j, phi, q);
      return p;
    }
    case Protocol::HollandBurnettExact:
      return hb_->probabilities(phi);
    case Protocol::SqueezedVacuum:
      break;
  }
  throw DomainError("pmf requested for a continuous-outcome model");
}

double PhaseModel::log_likelihood(double outcome, double phi) const {
  if (protocol_ == Protocol::SqueezedVacuum) {
    const auto& p = squeezed_params();
    return chi2_loglik(outcome, p.pool_size, phi, p);
  }
  const auto index = outcome_index(outcome);
  return std::log(pmf(phi)[index]);
}

double PhaseModel::sample(numerics::RandomStream& stream, double phi) const {
  return sample_many(stream, phi, 1).front();
}

std::vector<double> PhaseModel::sample_many(numerics::RandomStream& stream, double phi,
                                            int count) const {
  if (count < 0) throw DomainError("sample count must be >= 0");
  std::vector<double> out;
  out.reserve(count);
  if (protocol_ == Protocol::SqueezedVacuum) {
    const auto& p = squeezed_params();
    const double v = quadrature_variance(p.v_plus, p.v_minus, phi);
    for (int i = 0; i < count; ++i) out.push_back(chi2_sample(stream, p.pool_size, v));
    return out;
  }
  const DiscreteSampler sampler(pmf(phi));
  for (int i = 0; i < count; ++i) out.push_back(labels_[sampler.draw(stream)]);
  return out;
}

bool PhaseModel::outside_validity(double outcome) const {
  if (protocol_ != Protocol::HollandBurnettBessel) return false;
  return std::fabs(outcome) > hb_params().j / 4.0;
}

}  // namespace qsense::models

#include "qsense/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qsense/errors.hpp"

namespace qsense::bayes {

using numerics::kPi;

namespace {

constexpr int kMinGridSize = 33;

// Trapezoid coefficient for node i of an n-node grid (spacing excluded).
inline double trapezoid_coefficient(std::size_t i, std::size_t n) {
  return (i == 0 || i + 1 == n) ? 0.5 : 1.0;
}

}  // namespace

PriorSpec PriorSpec::full_circle() { return {-kPi, kPi, Topology::Circular}; }

PriorSpec PriorSpec::symmetric(double half_width) {
  return {-half_width, half_width, Topology::Linear};
}

void PriorSpec::validate() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw DomainError("prior: need finite lo < hi");
  }
  if (hi - lo > 2.0 * kPi * (1.0 + 1e-12)) throw DomainError("prior: width exceeds 2 pi");
  if (topology == Topology::Circular && std::fabs(hi - lo - 2.0 * kPi) > 1e-9) {
    throw DomainError("prior: circular topology requires hi - lo = 2 pi");
  }
}

PosteriorGrid::PosteriorGrid(PriorSpec prior, std::vector<double> nodes,
                             std::vector<double> log_weights)
    : prior_(prior), nodes_(std::move(nodes)), log_weights_(std::move(log_weights)) {
  const std::size_t n = nodes_.size();
  if (n < 2 || log_weights_.size() != n) throw DomainError("posterior grid: inconsistent sizes");
  spacing_ = (prior_.hi - prior_.lo) / static_cast<double>(n - 1);

  double peak = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights_) {
    if (std::isnan(lw)) throw NumericalError("posterior grid: NaN log-weight");
    peak = std::max(peak, lw);
  }
  if (!std::isfinite(peak)) {
    throw DegeneratePosterior("posterior has zero mass at every grid node");
  }
  weights_.resize(n);
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weights_[i] = std::exp(log_weights_[i] - peak);
    mass += trapezoid_coefficient(i, n) * weights_[i];
  }
  mass *= spacing_;
  for (double& w : weights_) w /= mass;
}

double PosteriorGrid::expectation(const std::function<double(double)>& f) const {
  double acc = 0.0;
  const std::size_t n = nodes_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (weights_[i] == 0.0) continue;
    acc += trapezoid_coefficient(i, n) * f(nodes_[i]) * weights_[i];
  }
  return acc * spacing_;
}

PosteriorGrid make_grid(const PriorSpec& prior, int grid_size) {
  prior.validate();
  if (grid_size < kMinGridSize || grid_size % 2 == 0) {
    throw DomainError("grid size must be odd and >= 33, got " + std::to_string(grid_size));
  }
  const double mid = 0.5 * (prior.lo + prior.hi);
  const double h = (prior.hi - prior.lo) / (grid_size - 1);
  const int centre = (grid_size - 1) / 2;
  std::vector<double> nodes(grid_size);
  for (int i = 0; i < grid_size; ++i) nodes[i] = mid + (i - centre) * h;
  nodes.front() = prior.lo;
  nodes.back() = prior.hi;
  return PosteriorGrid(prior, std::move(nodes), std::vector<double>(grid_size, 0.0));
}

// ---------------------------------------------------------------------------

LikelihoodTable::LikelihoodTable(const models::PhaseModel& model, std::span<const double> nodes)
    : labels_(model.outcomes().begin(), model.outcomes().end()), nodes_(nodes.size()) {
  if (!model.is_finite()) throw DomainError("likelihood table needs a finite outcome space");
  table_.assign(labels_.size() * nodes_, 0.0);
  for (std::size_t i = 0; i < nodes_; ++i) {
    const auto p = model.pmf(nodes[i]);
    for (std::size_t k = 0; k < labels_.size(); ++k) table_[k * nodes_ + i] = std::log(p[k]);
  }
}

std::size_t LikelihoodTable::index_of(double outcome) const {
  const double rounded = std::round(outcome);
  if (labels_.empty() || rounded != outcome || rounded < labels_.front() ||
      rounded > labels_.back()) {
    throw DomainError("outcome " + std::to_string(outcome) + " outside the model's outcome space");
  }
  return static_cast<std::size_t>(rounded - labels_.front());
}

std::span<const double> LikelihoodTable::log_row(std::size_t outcome_index) const {
  return std::span<const double>(table_).subspan(outcome_index * nodes_, nodes_);
}

PosteriorGrid update_counts(const PosteriorGrid& grid, const LikelihoodTable& table,
                            std::span<const std::int64_t> counts) {
  if (counts.size() != table.outcome_count()) throw DomainError("update: count vector size mismatch");
  std::vector<double> lw(grid.log_weights().begin(), grid.log_weights().end());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) continue;
    const auto row = table.log_row(k);
    if (row.size() != lw.size()) throw DomainError("update: table built for a different grid");
    const double c = static_cast<double>(counts[k]);
    for (std::size_t i = 0; i < lw.size(); ++i) lw[i] += c * row[i];
  }
  return PosteriorGrid(grid.prior(), std::vector<double>(grid.nodes().begin(), grid.nodes().end()),
                       std::move(lw));
}

PosteriorGrid update(const PosteriorGrid& grid, const LikelihoodTable& table,
                     std::span<const double> outcomes) {
  std::vector<std::int64_t> counts(table.outcome_count(), 0);
  for (double o : outcomes) ++counts[table.index_of(o)];
  return update_counts(grid, table, counts);
}

PosteriorGrid update(const PosteriorGrid& grid, const models::PhaseModel& model,
                     std::span<const double> outcomes) {
  if (outcomes.empty()) return grid;
  if (model.is_finite()) return update(grid, LikelihoodTable(model, grid.nodes()), outcomes);

  std::vector<double> lw(grid.log_weights().begin(), grid.log_weights().end());
  const auto nodes = grid.nodes();
  for (std::size_t i = 0; i < lw.size(); ++i) {
    for (double o : outcomes) lw[i] += model.log_likelihood(o, nodes[i]);
  }
  return PosteriorGrid(grid.prior(), std::vector<double>(nodes.begin(), nodes.end()), std::move(lw));
}

// ---------------------------------------------------------------------------

double circular_dispersion(const PosteriorGrid& grid) {
  const double c = grid.expectation([](double x) { return std::cos(x); });
  const double s = grid.expectation([](double x) { return std::sin(x); });
  return std::clamp(1.0 - (c * c + s * s), 0.0, 1.0);
}

Moments moments(const PosteriorGrid& grid) {
  const double mean = grid.expectation([](double x) { return x; });
  const double variance =
      std::max(0.0, grid.expectation([mean](double x) { return (x - mean) * (x - mean); }));
  const auto w = grid.weights();
  const auto peak = std::max_element(w.begin(), w.end());  // first maximum wins ties
  const double map = grid.nodes()[static_cast<std::size_t>(peak - w.begin())];
  const double c = grid.expectation([](double x) { return std::cos(x); });
  const double s = grid.expectation([](double x) { return std::sin(x); });
  return {mean, variance, map, std::atan2(s, c)};
}

double info_gain(const PosteriorGrid& prior, const PosteriorGrid& posterior) {
  if (prior.size() != posterior.size() || prior.prior().lo != posterior.prior().lo ||
      prior.prior().hi != posterior.prior().hi) {
    throw DomainError("info_gain: grids must share nodes");
  }
  const auto p = posterior.weights();
  const auto q = prior.weights();
  const std::size_t n = p.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw DomainError("info_gain: posterior mass outside prior support");
    acc += trapezoid_coefficient(i, n) * p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, acc * posterior.spacing());
}

std::function<double(double)> closed_posterior(ClosedForm kind, int photons) {
  if (photons < 1) throw DomainError("closed_posterior: N must be >= 1");
  if (kind == ClosedForm::Noon) {
    return [photons](double phi) {
      const double c = std::cos(0.5 * photons * phi);
      return c * c;
    };
  }
  return [photons](double phi) {
    const double c = std::cos(0.5 * phi);
    return std::pow(c * c, photons);
  };
}

}  // namespace qsense::bayes

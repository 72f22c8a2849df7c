#pragma once

// Grid posteriors over a single phase with a uniform prior. All integrals use
// the trapezoid rule on the node set.

#include <functional>
#include <span>
#include <vector>

#include "qsense/models.hpp"

namespace qsense::bayes {

inline constexpr int kDefaultGridSize = 4097;

enum class Topology { Circular, Linear };

struct PriorSpec {
  double lo = -numerics::kPi;
  double hi = numerics::kPi;
  Topology topology = Topology::Circular;

  static PriorSpec full_circle();
  /// Linear prior (-half_width, half_width).
  static PriorSpec symmetric(double half_width);
  /// Throws DomainError unless lo < hi and hi - lo <= 2 pi.
  void validate() const;
  double width() const { return hi - lo; }
};

class PosteriorGrid {
 public:
  PosteriorGrid(PriorSpec prior, std::vector<double> nodes, std::vector<double> log_weights);

  const PriorSpec& prior() const { return prior_; }
  std::span<const double> nodes() const { return nodes_; }
  /// Accumulated log-likelihood per node (prior is uniform).
  std::span<const double> log_weights() const { return log_weights_; }
  /// Normalised density values at the nodes.
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return nodes_.size(); }
  double spacing() const { return spacing_; }

  /// Trapezoid integral of f(phi) p(phi).
  double expectation(const std::function<double(double)>& f) const;

 private:
  PriorSpec prior_;
  std::vector<double> nodes_;
  std::vector<double> log_weights_;
  std::vector<double> weights_;
  double spacing_;
};

/// Uniform grid of M nodes; M must be odd and >= 33.
PosteriorGrid make_grid(const PriorSpec& prior, int grid_size = kDefaultGridSize);

/// log p(outcome | node) for every outcome of a finite model, precomputed so
/// repeated trials on the same grid avoid re-evaluating the model.
class LikelihoodTable {
 public:
  LikelihoodTable(const models::PhaseModel& model, std::span<const double> nodes);

  std::size_t outcome_count() const { return labels_.size(); }
  std::size_t index_of(double outcome) const;
  std::span<const double> log_row(std::size_t outcome_index) const;

 private:
  std::vector<int> labels_;
  std::size_t nodes_;
  std::vector<double> table_;  // outcome-major
};

/// Adds sum_i log p(outcome_i | node) and renormalises. Throws
/// DegeneratePosterior if every node ends at -infinity.
PosteriorGrid update(const PosteriorGrid& grid, const models::PhaseModel& model,
                     std::span<const double> outcomes);
PosteriorGrid update(const PosteriorGrid& grid, const LikelihoodTable& table,
                     std::span<const double> outcomes);
/// Same as update() but with per-outcome counts aligned with the table rows.
PosteriorGrid update_counts(const PosteriorGrid& grid, const LikelihoodTable& table,
                            std::span<const std::int64_t> counts);

/// 1 - |<e^{i phi}>|^2.
double circular_dispersion(const PosteriorGrid& grid);

struct Moments {
  double mean;
  double variance;
  double map;
  double circular_mean;
};

Moments moments(const PosteriorGrid& grid);

/// KL(posterior || prior) in nats, with 0 log 0 = 0.
double info_gain(const PosteriorGrid& prior, const PosteriorGrid& posterior);

enum class ClosedForm { Noon, MachZehnder };

/// Unnormalised cos^2(N phi / 2) (NOON) or cos^{2N}(phi / 2) (Mach-Zehnder).
std::function<double(double)> closed_posterior(ClosedForm kind, int photons);

}  // namespace qsense::bayes

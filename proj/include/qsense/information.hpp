#pragma once

// Classical Fisher information, closed-form QFIs, Cramer-Rao bounds and the
// resource bookkeeping (N = n r, yield, Heisenberg condition).

#include <cstdint>
#include <span>
#include <string_view>

#include "qsense/models.hpp"

namespace qsense::information {

struct ResourceLedger {
  std::int64_t repetitions = 1;
  double per_shot_cost = 1.0;
  double total = 1.0;
  double p_gen = 1.0;
  double eta_coup = 1.0;
  double eta_det = 1.0;

  /// Builds a ledger with total = n r. Throws DomainError for n < 1, r <= 0
  /// or efficiencies outside [0, 1].
  static ResourceLedger make(std::int64_t n, double r, double p_gen = 1.0, double eta_coup = 1.0,
                             double eta_det = 1.0);

  double yield() const { return p_gen * eta_coup * eta_det; }
};

enum class ScalingClass { ShotNoiseLike, HeisenbergLike, Intermediate };
std::string_view scaling_class_name(ScalingClass c);

struct HeisenbergCheck {
  double residual;  // n r^2 - F_Q
  ScalingClass classification;
};

struct BoundReport {
  double fisher_per_detection;
  double qfi_per_detection;
  double cr_variance_bound;
  double heisenberg_residual;
  ScalingClass scaling_class;
};

struct FisherResult {
  double value = 0.0;
  /// Some outcome had p < 1e-12 with |p'| >= 1e-9; value excludes it.
  bool divergent = false;
};

enum class FisherMethod {
  Auto,     // registered closed form where one exists
  Numeric,  // always finite differences (and quadrature for continuous outcomes)
};

/// F = sum_k p_k'^2 / p_k per detection event. Holland-Burnett at theta = 0
/// is evaluated as a Richardson limit over theta in {1e-2, 5e-3, 2.5e-3}.
FisherResult classical_fisher(const models::PhaseModel& model, double phi,
                              FisherMethod method = FisherMethod::Auto);

double qfi_noon(int photons);
double qfi_hb(int j);
double qfi_squeezed_vacuum(double s);
/// 4 (Delta G)^2 for a pure state and generator variance (Delta G)^2.
double qfi_pure(double generator_variance);
/// QFI per detection event of the state behind a model.
double qfi_for_model(const models::PhaseModel& model);

/// 1 / (n F).
double cr_bound(std::int64_t n, double fisher);
/// Holland-Burnett bound 1 / (N (j + 1)) at total resources N.
double cr_bound_hb(double total_photons, int j);

HeisenbergCheck heisenberg_condition(std::int64_t n, double r, double qfi);

/// n * Y * F, the yield-weighted information per acquisition window.
double effective_rate(std::int64_t n, const ResourceLedger& ledger, double fisher);

struct ResourcePoint {
  double total_resources;
  double variance;
};

/// Least-squares slope of ln(variance) against ln(total_resources).
double scaling_exponent(std::span<const ResourcePoint> points);

BoundReport bound_report(const models::PhaseModel& model, double phi, std::int64_t n);

}  // namespace qsense::information

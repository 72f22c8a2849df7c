#include "qsense/information.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qsense/errors.hpp"
#include "qsense/numerics.hpp"

namespace qsense::information {

using models::PhaseModel;
using models::Protocol;

namespace {

constexpr double kTinyProbability = 1e-12;
constexpr double kTinySlope = 1e-9;
constexpr std::array<double, 3> kLimitOffsets = {1e-2, 5e-3, 2.5e-3};

struct FiniteFisher {
  FisherResult result;
  bool removable = false;  // some zero-probability outcome was skipped
};

FiniteFisher finite_numeric(const PhaseModel& model, double phi) {
  const double h = numerics::default_step(phi);
  const auto p = model.pmf(phi);
  const auto pm2 = model.pmf(phi - 2.0 * h);
  const auto pm1 = model.pmf(phi - h);
  const auto pp1 = model.pmf(phi + h);
  const auto pp2 = model.pmf(phi + 2.0 * h);

  FiniteFisher out;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double slope = numerics::richardson_central(pm2[k], pm1[k], pp1[k], pp2[k], h);
    if (p[k] < kTinyProbability) {
      if (std::fabs(slope) < kTinySlope) {
        out.removable = true;
      } else {
        out.result.divergent = true;
      }
      continue;
    }
    out.result.value += slope * slope / p[k];
  }
  return out;
}

// Even in the offset, so F(offset) = F0 + a d^2 + b d^4 and two Richardson
// levels remove both corrections.
FisherResult finite_limit(const PhaseModel& model, double phi) {
  std::array<double, 3> values{};
  bool divergent = false;
  for (std::size_t i = 0; i < kLimitOffsets.size(); ++i) {
    const auto up = finite_numeric(model, phi + kLimitOffsets[i]);
    const auto down = finite_numeric(model, phi - kLimitOffsets[i]);
    values[i] = 0.5 * (up.result.value + down.result.value);
    divergent = divergent || up.result.divergent || down.result.divergent;
  }
  const double first = (4.0 * values[1] - values[0]) / 3.0;
  const double second = (4.0 * values[2] - values[1]) / 3.0;
  return {(16.0 * second - first) / 15.0, divergent};
}

double squeezed_analytic(const PhaseModel& model, double theta) {
  const auto& p = model.squeezed_params();
  const double v = models::quadrature_variance(p.v_plus, p.v_minus, theta);
  const double dv = (p.v_minus - p.v_plus) * std::sin(2.0 * theta);
  return p.pool_size * dv * dv / (2.0 * v * v);
}

double squeezed_numeric(const PhaseModel& model, double theta) {
  const auto& p = model.squeezed_params();
  const double v = models::quadrature_variance(p.v_plus, p.v_minus, theta);
  const int n = p.pool_size;
  // Substitute y = V(theta) u so the quadrature sees a unit-scale density.
  auto integrand = [&](double u) {
    const double y = v * u;
    const double score = numerics::numeric_derivative(
        [&](double t) { return models::chi2_loglik(y, n, t, p); }, theta);
    return score * score * std::exp(models::chi2_loglik(y, n, theta, p)) * v;
  };
  return numerics::integrate_positive_half_line(integrand, 1e-10);
}

}  // namespace

ResourceLedger ResourceLedger::make(std::int64_t n, double r, double p_gen, double eta_coup,
                                    double eta_det) {
  if (n < 1) throw DomainError("ledger: repetition count must be >= 1");
  if (!(r > 0.0)) throw DomainError("ledger: per-shot cost must be positive");
  for (double f : {p_gen, eta_coup, eta_det}) {
    if (!(f >= 0.0 && f <= 1.0)) throw DomainError("ledger: efficiencies must lie in [0, 1]");
  }
  return {n, r, static_cast<double>(n) * r, p_gen, eta_coup, eta_det};
}

std::string_view scaling_class_name(ScalingClass c) {
  switch (c) {
    case ScalingClass::ShotNoiseLike: return "shot-noise-like";
    case ScalingClass::HeisenbergLike: return "heisenberg-like";
    case ScalingClass::Intermediate: return "intermediate";
  }
  return "intermediate";
}

FisherResult classical_fisher(const PhaseModel& model, double phi, FisherMethod method) {
  if (!model.in_domain(phi)) throw DomainError("classical_fisher: phase outside validity domain");

  if (method == FisherMethod::Auto) {
    switch (model.protocol()) {
      case Protocol::NoonFull:
      case Protocol::NoonParity: {
        const double n = model.photons();
        return {n * n, false};
      }
      case Protocol::MachZehnder:
        return {1.0, false};
      case Protocol::SqueezedVacuum:
        return {squeezed_analytic(model, phi), false};
      default:
        break;
    }
  }

  if (!model.is_finite()) return {squeezed_numeric(model, phi), false};

  const auto direct = finite_numeric(model, phi);
  if (direct.removable) return finite_limit(model, phi);
  return direct.result;
}

double qfi_noon(int photons) {
  if (photons < 1) throw DomainError("qfi_noon: N must be >= 1");
  const double n = photons;
  return n * n;
}

double qfi_hb(int j) {
  if (j < 1) throw DomainError("qfi_hb: j must be >= 1");
  return 2.0 * j * (j + 1.0);
}

double qfi_squeezed_vacuum(double s) {
  if (!(s >= 0.0)) throw DomainError("qfi_squeezed_vacuum: s must be >= 0");
  const double sh = std::sinh(2.0 * s);
  return 2.0 * sh * sh;
}

double qfi_pure(double generator_variance) {
  if (!(generator_variance >= 0.0)) throw DomainError("qfi_pure: variance must be >= 0");
  return 4.0 * generator_variance;
}

double qfi_for_model(const PhaseModel& model) {
  switch (model.protocol()) {
    case Protocol::NoonFull:
    case Protocol::NoonParity:
      return qfi_noon(model.photons());
    case Protocol::MachZehnder:
      return 1.0;
    case Protocol::HollandBurnettBessel:
    case Protocol::HollandBurnettExact:
      return qfi_hb(model.hb_params().j);
    case Protocol::SqueezedVacuum: {
      const auto& p = model.squeezed_params();
      return p.pool_size * qfi_squeezed_vacuum(p.squeezing);
    }
  }
  return 0.0;
}

double cr_bound(std::int64_t n, double fisher) {
  if (n < 1) throw DomainError("cr_bound: n must be >= 1");
  if (!(fisher > 0.0)) throw DomainError("cr_bound: Fisher information must be positive");
  return 1.0 / (static_cast<double>(n) * fisher);
}

double cr_bound_hb(double total_photons, int j) {
  if (!(total_photons > 0.0) || j < 1) throw DomainError("cr_bound_hb: need N > 0 and j >= 1");
  return 1.0 / (total_photons * (j + 1.0));
}

HeisenbergCheck heisenberg_condition(std::int64_t n, double r, double qfi) {
  if (n < 1) throw DomainError("heisenberg_condition: n must be >= 1");
  if (!(r > 0.0)) throw DomainError("heisenberg_condition: r must be positive");
  const double nd = static_cast<double>(n);
  const double residual = nd * r * r - qfi;
  const double total = nd * r;
  if (qfi > 0.0 && std::fabs(residual) / qfi < 0.05 && total >= 10.0) {
    return {residual, ScalingClass::HeisenbergLike};
  }
  if (qfi / r <= 1.05) return {residual, ScalingClass::ShotNoiseLike};
  return {residual, ScalingClass::Intermediate};
}

double effective_rate(std::int64_t n, const ResourceLedger& ledger, double fisher) {
  if (!(fisher >= 0.0)) throw DomainError("effective_rate: Fisher information must be >= 0");
  return static_cast<double>(n) * ledger.yield() * fisher;
}

double scaling_exponent(std::span<const ResourcePoint> points) {
  if (points.size() < 3) throw DomainError("scaling_exponent: need at least 3 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& pt : points) {
    if (!(pt.total_resources > 0.0) || !(pt.variance > 0.0)) {
      throw DomainError("scaling_exponent: resources and variances must be positive");
    }
    sx += std::log(pt.total_resources);
    sy += std::log(pt.variance);
  }
  const double count = static_cast<double>(points.size());
  const double mx = sx / count, my = sy / count;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& pt : points) {
    const double dx = std::log(pt.total_resources) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(pt.variance) - my);
  }
  if (!(sxx > 0.0)) throw DomainError("scaling_exponent: resource levels must differ");
  return sxy / sxx;
}

BoundReport bound_report(const PhaseModel& model, double phi, std::int64_t n) {
  const double fisher = classical_fisher(model, phi).value;
  const double qfi = qfi_for_model(model);
  const double cr = fisher > 0.0 ? cr_bound(n, fisher) : std::numeric_limits<double>::infinity();
  const auto check = heisenberg_condition(n, model.resource_cost(), qfi);
  return {fisher, qfi, cr, check.residual, check.classification};
}

}  // namespace qsense::information

#include "hb_propagator.hpp"

#include <cmath>

#include "qsense/numerics.hpp"

namespace qsense::models {

HbPropagator::HbPropagator(int j) : j_(j) {
  const int dim = 2 * j + 1;
  Eigen::MatrixXd jx = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i + 1 < dim; ++i) {
    const double m = i - j;
    const double raise = 0.5 * std::sqrt(static_cast<double>(j) * (j + 1) - m * (m + 1));
    jx(i + 1, i) = raise;
    jx(i, i + 1) = raise;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jx);
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  // Eigenvalues of J_x are exactly -j..j; rounding removes solver noise.
  Eigen::VectorXcd phases(dim);
  for (int i = 0; i < dim; ++i) {
    const double lambda = std::round(solver.eigenvalues()(i));
    phases(i) = std::polar(1.0, -0.5 * numerics::kPi * lambda);
  }
  splitter_ = vectors.cast<std::complex<double>>() * phases.asDiagonal() *
              vectors.transpose().cast<std::complex<double>>();
  after_first_ = splitter_.col(j);
}

std::vector<double> HbPropagator::probabilities(double theta) const {
  const int dim = 2 * j_ + 1;
  Eigen::VectorXcd shifted(dim);
  for (int i = 0; i < dim; ++i) {
    shifted(i) = after_first_(i) * std::polar(1.0, theta * (i - j_));
  }
  const Eigen::VectorXcd out = splitter_ * shifted;
  std::vector<double> p(dim);
  for (int i = 0; i < dim; ++i) p[i] = std::norm(out(i));
  return p;
}

}  // namespace qsense::models

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace qsense::models {

/// Two-mode Fock sector with 2j photons, basis |j+m, j-m>, m = -j..j.
///
/// The balanced beam splitter is exp(-i pi/2 J_x); the phase e^{i theta a^dag a}
/// on one arm acts as e^{i theta J_z} up to a global phase. The state after
/// the first splitter is cached, so each evaluation costs one (2j+1)^2 product.
class HbPropagator {
 public:
  explicit HbPropagator(int j);

  int j() const { return j_; }
  /// |<j+q, j-q| B e^{i theta J_z} B |j, j>|^2 for q = -j..j.
  std::vector<double> probabilities(double theta) const;

 private:
  int j_;
  Eigen::MatrixXcd splitter_;
  Eigen::VectorXcd after_first_;
};

}  // namespace qsense::models

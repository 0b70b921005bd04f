#pragma once

#include <Eigen/Dense>

#include "countpo/rng.hpp"

namespace countpo {

// Cholesky factor of a dense SPD matrix with the handful of operations the
// samplers need.  Thin wrapper over Eigen's LLT; rejects non-SPD input.
class SpdFactor {
 public:
  static SpdFactor factorize(const Eigen::MatrixXd& a);

  int dim() const { return static_cast<int>(llt_.matrixL().rows()); }

  // x with A x = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  // x^T A^{-1} x, evaluated through the factor (no explicit inverse).
  double quad_form_inv(const Eigen::VectorXd& x) const;

  // Draw from N(mean, A^{-1}) where A is the factorized precision matrix:
  // mean + L^{-T} z with z standard normal.
  Eigen::VectorXd sample_gaussian_precision(const Eigen::VectorXd& mean,
                                            RngStream& rng) const;

  // Lower-triangular L with A = L L^T.
  Eigen::MatrixXd matrix_l() const { return llt_.matrixL(); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace countpo

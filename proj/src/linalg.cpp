#include "countpo/linalg.hpp"

#include <string>

#include "countpo/errors.hpp"

namespace countpo {

SpdFactor SpdFactor::factorize(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols())
    throw ValidationError("factorize: matrix is not square");
  if (a.rows() == 0) throw ValidationError("factorize: matrix is empty");
  if (!a.allFinite())
    throw NumericError("factorize: matrix has non-finite entries");
  if (!a.isApprox(a.transpose(), 1e-12))
    throw ValidationError("factorize: matrix is not symmetric");
  SpdFactor f;
  f.llt_.compute(a);
  if (f.llt_.info() != Eigen::Success)
    throw NumericError("factorize: matrix is not positive definite (dim " +
                       std::to_string(a.rows()) + ")");
  return f;
}

Eigen::VectorXd SpdFactor::solve(const Eigen::VectorXd& b) const {
  if (b.size() != dim())
    throw NumericError("solve: right-hand side has wrong length");
  return llt_.solve(b);
}

double SpdFactor::quad_form_inv(const Eigen::VectorXd& x) const {
  if (x.size() != dim())
    throw NumericError("quad_form_inv: vector has wrong length");
  Eigen::VectorXd u = x;
  llt_.matrixL().solveInPlace(u);
  return u.squaredNorm();
}

Eigen::VectorXd SpdFactor::sample_gaussian_precision(
    const Eigen::VectorXd& mean, RngStream& rng) const {
  if (mean.size() != dim())
    throw NumericError("sample_gaussian_precision: mean has wrong length");
  Eigen::VectorXd z(dim());
  for (int j = 0; j < dim(); ++j) z[j] = rng.next_normal();
  llt_.matrixU().solveInPlace(z);
  return mean + z;
}

}  // namespace countpo

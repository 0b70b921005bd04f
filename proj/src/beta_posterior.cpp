#include "countpo/beta_posterior.hpp"

#include <cmath>
#include <string>

#include "countpo/errors.hpp"

namespace countpo {

GaussianPosterior fit_beta_posterior(const Dataset& d, const ModelSpec& spec,
                                     const ParameterState& state) {
  validate_state(d, spec, state);
  const int n = d.n();
  const int p = d.k() + 1;
  const int dim = 2 * p;

  Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(dim, dim);
  prec.diagonal().setConstant(1.0 / spec.sigma_beta_sq);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);

  GaussianPosterior post;
  for (int i = 0; i < n; ++i) {
    double weight = static_cast<double>(d.y_obs[i]);
    double response;
    if (d.y_obs[i] == 0) {
      switch (spec.zero_policy) {
        case ZeroPolicy::kError:
          throw ValidationError("fit_beta_posterior: zero count at unit " +
                                std::to_string(i) +
                                " (zero_policy = error)");
        case ZeroPolicy::kDropRow:
          ++post.rows_dropped;
          continue;
        case ZeroPolicy::kContinuity:
          weight = 0.5;
          break;
      }
      response = std::log(weight);
    } else {
      response = std::log(weight);
    }
    const bool treated = d.w[i] == 1;
    const double m_obs =
        std::log(treated ? state.eps_t[i] : state.eps_c[i]);
    const int offset = treated ? p : 0;
    const auto xi = d.x.row(i).transpose();
    prec.block(offset, offset, p, p)
        .selfadjointView<Eigen::Lower>()
        .rankUpdate(xi, weight);
    rhs.segment(offset, p) += weight * (response - m_obs) * xi;
    ++post.rows_used;
  }
  prec = prec.selfadjointView<Eigen::Lower>();

  post.precision = prec;
  post.factor = SpdFactor::factorize(prec);
  post.mean = post.factor.solve(rhs);
  return post;
}

Eigen::VectorXd sample_beta(const GaussianPosterior& post, RngStream& rng) {
  return post.factor.sample_gaussian_precision(post.mean, rng);
}

NormalLaw mis_predictor_law(const Dataset& d, const ParameterState& state,
                            const GaussianPosterior& post, int i) {
  if (i < 0 || i >= d.n())
    throw ValidationError("mis_predictor_law: unit index out of range");
  const DesignRows rows = design_rows(d, state, i);
  NormalLaw law;
  law.mean = rows.x_mis.dot(post.mean) + rows.m_mis;
  law.variance = post.factor.quad_form_inv(rows.x_mis);
  return law;
}

}  // namespace countpo

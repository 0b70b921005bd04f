#include "countpo/model.hpp"

#include <cmath>
#include <string>

#include "countpo/errors.hpp"

namespace countpo {

ParameterState make_unit_state(int n, int d) {
  ParameterState s;
  s.beta = Eigen::VectorXd::Zero(d);
  s.eps_c = Eigen::VectorXd::Ones(n);
  s.eps_t = Eigen::VectorXd::Ones(n);
  s.sigma_c_sq = 1.0;
  s.sigma_t_sq = 1.0;
  return s;
}

void validate_state(const Dataset& d, const ModelSpec& spec,
                    const ParameterState& s) {
  const int n = d.n();
  const int dim = 2 * (d.k() + 1);
  if (s.beta.size() != dim)
    throw ValidationError("state: beta length " + std::to_string(s.beta.size()) +
                          " != 2(k+1) = " + std::to_string(dim));
  if (!s.beta.allFinite()) throw ValidationError("state: non-finite beta");
  if (s.eps_c.size() != n || s.eps_t.size() != n)
    throw ValidationError("state: eps vectors must have length N");
  for (int i = 0; i < n; ++i) {
    if (!(s.eps_c[i] > 0.0) || !(s.eps_t[i] > 0.0))
      throw ValidationError("state: eps must be strictly positive (unit " +
                            std::to_string(i) + ")");
  }
  if (spec.overdispersion == Overdispersion::kLognormalPoisson) {
    if (!(s.sigma_c_sq > 0.0) || !(s.sigma_t_sq > 0.0))
      throw ValidationError("state: sigma^2 must be strictly positive");
  }
  if (!(spec.sigma_beta_sq > 0.0))
    throw ValidationError("spec: sigma_beta_sq must be strictly positive");
}

DesignRows design_rows(const Dataset& d, const ParameterState& s, int i) {
  const int p = d.k() + 1;
  DesignRows rows;
  rows.x_obs = Eigen::VectorXd::Zero(2 * p);
  rows.x_mis = Eigen::VectorXd::Zero(2 * p);
  const auto xi = d.x.row(i).transpose();
  if (d.w[i] == 0) {
    rows.x_obs.head(p) = xi;
    rows.x_mis.tail(p) = xi;
    rows.m_obs = std::log(s.eps_c[i]);
    rows.m_mis = std::log(s.eps_t[i]);
  } else {
    rows.x_obs.tail(p) = xi;
    rows.x_mis.head(p) = xi;
    rows.m_obs = std::log(s.eps_t[i]);
    rows.m_mis = std::log(s.eps_c[i]);
  }
  return rows;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> linear_predictors(
    const Dataset& d, const ParameterState& s) {
  const int n = d.n();
  const int p = d.k() + 1;
  const auto beta_c = s.beta.head(p);
  const auto beta_t = s.beta.tail(p);
  Eigen::VectorXd xb_c = d.x * beta_c;
  Eigen::VectorXd xb_t = d.x * beta_t;
  Eigen::VectorXd xi_obs(n);
  Eigen::VectorXd xi_mis(n);
  for (int i = 0; i < n; ++i) {
    const double log_ec = std::log(s.eps_c[i]);
    const double log_et = std::log(s.eps_t[i]);
    if (d.w[i] == 0) {
      xi_obs[i] = xb_c[i] + log_ec;
      xi_mis[i] = xb_t[i] + log_et;
    } else {
      xi_obs[i] = xb_t[i] + log_et;
      xi_mis[i] = xb_c[i] + log_ec;
    }
    if (!(std::fabs(xi_obs[i]) <= 700.0) || !(std::fabs(xi_mis[i]) <= 700.0))
      throw NumericError("linear_predictors: |xi| > 700 at unit " +
                         std::to_string(i) + " (rate would over/underflow)");
  }
  return {std::move(xi_obs), std::move(xi_mis)};
}

}  // namespace countpo

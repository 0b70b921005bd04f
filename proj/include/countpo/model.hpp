#pragma once

#include <Eigen/Dense>
#include <utility>

#include "countpo/data.hpp"

namespace countpo {

enum class Overdispersion { kPoisson, kLognormalPoisson };

// What to do with zero counts where a formula needs log(y) or weight y.
enum class ZeroPolicy { kError, kDropRow, kContinuity };

// Inverse-gamma parameters: density proportional to x^-(alpha+1) exp(-nu/x).
struct IgParams {
  double alpha = 2.0;
  double nu = 1.0;
};

struct ModelSpec {
  Overdispersion overdispersion = Overdispersion::kPoisson;
  double sigma_beta_sq = 100.0;  // prior variance of every beta coordinate
  IgParams ig_c;                 // hyperprior on sigma_c^2 (lognormal-Poisson)
  IgParams ig_t;                 // hyperprior on sigma_t^2
  ZeroPolicy zero_policy = ZeroPolicy::kDropRow;
};

// Current parameter values.  beta stacks the control block before the treated
// block, each of length k+1.  eps vectors are unit-level multiplicative
// overdispersion terms, identically one under the Poisson model.
struct ParameterState {
  Eigen::VectorXd beta;
  Eigen::VectorXd eps_c;
  Eigen::VectorXd eps_t;
  double sigma_c_sq = 0.0;
  double sigma_t_sq = 0.0;
};

// beta = 0, eps = 1, sigma^2 = 1: the reference state used wherever
// overdispersion is pinned; valid under either model family.
ParameterState make_unit_state(int n, int d);

void validate_state(const Dataset& d, const ModelSpec& spec,
                    const ParameterState& s);

// Kronecker design rows of unit i.
//
// The observed row selects the assigned arm's coefficient block, the missing
// row the other arm's:
//   W_i = 0:  x_obs = (x_i, 0),  x_mis = (0, x_i)
//   W_i = 1:  x_obs = (0, x_i),  x_mis = (x_i, 0)
// m_obs / m_mis are the matching log-overdispersion offsets.
struct DesignRows {
  Eigen::VectorXd x_obs;
  Eigen::VectorXd x_mis;
  double m_obs = 0.0;
  double m_mis = 0.0;
};

DesignRows design_rows(const Dataset& d, const ParameterState& s, int i);

// Per-unit linear predictors xi = x . beta + m for the observed and missing
// sides.  Throws NumericError (with the unit index) when |xi| > 700, where
// exp would overflow or vanish.
std::pair<Eigen::VectorXd, Eigen::VectorXd> linear_predictors(
    const Dataset& d, const ParameterState& s);

}  // namespace countpo

#pragma once

#include <Eigen/Dense>

#include "countpo/data.hpp"
#include "countpo/linalg.hpp"
#include "countpo/model.hpp"
#include "countpo/rng.hpp"

namespace countpo {

// Gaussian approximation of the regression coefficient posterior.
//
// Each observed count contributes a normal factor N(xi_obs | log y, 1/y) in
// its linear predictor, so given the overdispersion terms the posterior of
// beta is exactly Gaussian with
//
//   precision  P = X_obs^T diag(y) X_obs + I / sigma_beta^2
//   mean      mu = P^{-1} X_obs^T diag(y) (log y - m_obs)
//
// where X_obs stacks the Kronecker rows and m_obs the log-overdispersion
// offsets.  Rows are two-block sparse (one arm's block per unit), which the
// accumulation exploits; the factorization itself is dense in d = 2(k+1).
struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision;
  SpdFactor factor;             // Cholesky of `precision`
  int rows_used = 0;            // units contributing likelihood terms
  int rows_dropped = 0;         // zero counts removed under ZeroPolicy::kDropRow
};

// Builds the posterior at the state's overdispersion values.  Zero counts
// follow spec.zero_policy: kError throws, kDropRow removes the unit from the
// likelihood, kContinuity substitutes y + 1/2 as weight and response.
GaussianPosterior fit_beta_posterior(const Dataset& d, const ModelSpec& spec,
                                     const ParameterState& state);

// One draw from N(mean, precision^{-1}).
Eigen::VectorXd sample_beta(const GaussianPosterior& post, RngStream& rng);

// Normal law of the missing-side linear predictor of unit i induced by the
// beta posterior: mean x_mis . mu + m_mis, variance x_mis^T P^{-1} x_mis.
struct NormalLaw {
  double mean = 0.0;
  double variance = 0.0;
};

NormalLaw mis_predictor_law(const Dataset& d, const ParameterState& state,
                            const GaussianPosterior& post, int i);

}  // namespace countpo

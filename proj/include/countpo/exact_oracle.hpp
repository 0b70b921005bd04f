#pragma once

#include <cstdint>
#include <vector>

#include "countpo/data.hpp"
#include "countpo/gibbs.hpp"
#include "countpo/model.hpp"

namespace countpo {

// Reference sampler that targets the exact posterior (no normal/log-Gamma
// substitution): random-walk Metropolis on beta, per-unit Metropolis on the
// active-arm log overdispersion terms, direct conjugate draws for the
// inactive-arm terms and the variance hyperparameters.  Slow by design; it
// exists to measure the approximation against.
struct OracleConfig {
  int iterations = 100000;   // total MH sweeps, burn-in included
  int burn_in = 20000;
  int thin = 1;
  std::uint64_t seed = 1;
  double beta_step = 1.0;    // scalar step on the preconditioned proposal
  double eps_step = 1.0;
  bool adapt = true;         // Robbins-Monro step tuning during burn-in only
  bool likelihood_enabled = true;  // false targets the prior (sampler check)
  double max_seconds = 0.0;
};

struct OracleResult {
  Chain chain;
  double beta_accept_rate = 0.0;  // measured after burn-in
  double eps_accept_rate = 0.0;   // active-arm proposals only
  double final_beta_step = 0.0;
  double final_eps_step = 0.0;
};

// Joint log density of (beta, log eps, sigma^2) under the exact model, up to
// no missing constants: Poisson likelihood (if enabled) + N(0, sigma_beta^2)
// prior on beta + N(0, sigma^2) priors on log eps + inverse-gamma
// hyperpriors.  Overdispersion terms appear only under the lognormal spec.
double log_posterior(const Dataset& d, const ModelSpec& spec,
                     const ParameterState& state,
                     bool likelihood_enabled = true);

OracleResult run_oracle(const Dataset& d, const ModelSpec& spec,
                        const OracleConfig& config);

// Per-coordinate Monte Carlo standard error of the mean by batch means with
// ceil(sqrt(R)) batches.
Eigen::VectorXd mcse_batch_means(const std::vector<Eigen::VectorXd>& draws);

}  // namespace countpo

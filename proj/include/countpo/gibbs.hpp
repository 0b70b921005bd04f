#pragma once

#include <cstdint>
#include <vector>

#include "countpo/beta_posterior.hpp"
#include "countpo/data.hpp"
#include "countpo/model.hpp"
#include "countpo/rng.hpp"

namespace countpo {

struct GibbsConfig {
  int iterations = 1000;    // total sweeps, burn-in included
  int burn_in = 200;        // discarded sweeps before retention starts
  int thin = 1;             // keep every thin-th sweep after burn-in
  std::uint64_t seed = 1;
  double max_seconds = 0.0; // soft deadline checked per sweep; 0 = none
};

// Retained posterior draws.  Under the Poisson spec the eps vectors of each
// draw are stored empty (overdispersion is pinned at one); chain_state
// materializes them on demand.
struct Chain {
  std::vector<ParameterState> draws;
  ModelSpec spec;
  GibbsConfig config;
  int sweeps_done = 0;
  bool timed_out = false;
  double seconds = 0.0;

  int r() const { return static_cast<int>(draws.size()); }
};

// Full state of retained draw r, with pinned eps vectors filled in.
ParameterState chain_state(const Chain& chain, int r, int n);

// Lognormal full conditional of one unit's overdispersion term, as the
// normal law of log eps.  For the arm the unit was not assigned to, the
// likelihood carries no information and the prior N(0, sigma^2) comes back.
// Active arm with count y:
//   s^2 = 1 / (y + 1/sigma^2),   m = -y (x_i . beta_arm - log y) s^2,
// zero counts following spec.zero_policy (drop = prior for that unit's
// sweep, continuity = the zero count replaced by 1/2).
NormalLaw eps_conditional(const Dataset& d, const ModelSpec& spec,
                          const Eigen::VectorXd& beta, double sigma_sq, int i,
                          int arm);

// Conjugate update of one arm's variance hyperparameter:
// IG(alpha + n/2, nu + sum(log eps)^2 / 2).
IgParams hyper_conditional(const IgParams& prior,
                           const Eigen::VectorXd& log_eps);

// sigma^2 ~ IG(params); drawn as the reciprocal of a Gamma(alpha, rate nu)
// variate.  Shared by the Gibbs sweep and the exact sampler.
double draw_inverse_gamma(const IgParams& params, RngStream& rng);

// Systematic-scan Gibbs: beta, then eps, then the variance hyperparameters.
// Under the Poisson spec the last two blocks are skipped and the beta
// posterior (which then never changes) is factorized once.
Chain run_chain(const Dataset& d, const ModelSpec& spec,
                const GibbsConfig& config);

}  // namespace countpo

#pragma once

#include <cstdint>
#include <vector>

#include "countpo/data.hpp"
#include "countpo/gibbs.hpp"
#include "countpo/model.hpp"
#include "countpo/rng.hpp"

namespace countpo {

// Missing potential outcomes for every unit at one parameter draw:
// Y_mis,i ~ Poisson(exp(xi_mis,i)).  Unit i draws from rep_stream.split(i),
// so imputations are independent of traversal order.
std::vector<std::int64_t> impute_ymis(const Dataset& d,
                                      const ParameterState& state,
                                      RngStream rep_stream);

// (1/N) sum (2 W_i - 1) (Y_obs,i - Y_mis,i): the finite-population average
// treatment effect once the missing side is filled in.
double ate_of_imputation(const Dataset& d,
                         const std::vector<std::int64_t>& y_mis);

struct ImputationOptions {
  bool redraw_beta = false;  // redraw beta from its conditional at each rep
                             // instead of reusing the chain's draw
  int threads = 1;
};

struct AteEstimate {
  double mean = 0.0;
  double variance = 0.0;      // unbiased across-replication variance
  std::vector<double> reps;   // one ATE per retained draw

  int r() const { return static_cast<int>(reps.size()); }
};

// Multiple imputation over the retained chain draws: replication r uses the
// r-th draw, imputes the missing outcomes, and records the resulting ATE.
// Replications run in parallel; every (r, i) cell has its own substream of
// `seed`, so results are identical for any thread count.
AteEstimate estimate_ate(const Dataset& d, const Chain& chain,
                         std::uint64_t seed,
                         const ImputationOptions& options = {});

}  // namespace countpo

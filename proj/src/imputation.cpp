#include "countpo/imputation.hpp"

#include <cmath>

#include "countpo/beta_posterior.hpp"
#include "countpo/errors.hpp"
#include "countpo/parallel.hpp"

namespace countpo {
namespace {

constexpr std::uint64_t kImputeTag = 0;
constexpr std::uint64_t kRedrawTag = 1;

}  // namespace

std::vector<std::int64_t> impute_ymis(const Dataset& d,
                                      const ParameterState& state,
                                      RngStream rep_stream) {
  const auto [xi_obs, xi_mis] = linear_predictors(d, state);
  (void)xi_obs;
  const int n = d.n();
  std::vector<std::int64_t> y_mis(n);
  for (int i = 0; i < n; ++i) {
    RngStream cell = rep_stream.split(static_cast<std::uint64_t>(i));
    y_mis[i] = cell.next_poisson(std::exp(xi_mis[i]));
  }
  return y_mis;
}

double ate_of_imputation(const Dataset& d,
                         const std::vector<std::int64_t>& y_mis) {
  const int n = d.n();
  if (static_cast<int>(y_mis.size()) != n)
    throw ValidationError("ate_of_imputation: y_mis length != N");
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double sign = d.w[i] == 1 ? 1.0 : -1.0;
    sum += sign * static_cast<double>(d.y_obs[i] - y_mis[i]);
  }
  return sum / static_cast<double>(n);
}

AteEstimate estimate_ate(const Dataset& d, const Chain& chain,
                         std::uint64_t seed,
                         const ImputationOptions& options) {
  const int r = chain.r();
  if (r < 2)
    throw ValidationError(
        "estimate_ate: need at least 2 retained draws for a variance");
  if (options.threads < 1)
    throw ValidationError("estimate_ate: threads must be >= 1");
  const RngStream root(seed);
  const RngStream impute_root = root.split(kImputeTag);
  const RngStream redraw_root = root.split(kRedrawTag);

  AteEstimate est;
  est.reps.assign(r, 0.0);
  parallel_for(r, options.threads, [&](int rep) {
    ParameterState state = chain_state(chain, rep, d.n());
    if (options.redraw_beta) {
      const GaussianPosterior post = fit_beta_posterior(d, chain.spec, state);
      RngStream redraw = redraw_root.split(static_cast<std::uint64_t>(rep));
      state.beta = sample_beta(post, redraw);
    }
    const auto y_mis =
        impute_ymis(d, state, impute_root.split(static_cast<std::uint64_t>(rep)));
    est.reps[rep] = ate_of_imputation(d, y_mis);
  });

  double sum = 0.0;
  for (const double a : est.reps) sum += a;
  est.mean = sum / static_cast<double>(r);
  double ss = 0.0;
  for (const double a : est.reps) ss += (a - est.mean) * (a - est.mean);
  est.variance = ss / static_cast<double>(r - 1);
  return est;
}

}  // namespace countpo

#include "countpo/gibbs.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "countpo/errors.hpp"

namespace countpo {
namespace {

// Substream tags; arbitrary but fixed.
constexpr std::uint64_t kInitTag = 0;
constexpr std::uint64_t kBetaTag = 1;
constexpr std::uint64_t kEpsTag = 2;
constexpr std::uint64_t kHyperTag = 3;

void check_config(const GibbsConfig& c) {
  if (c.iterations < 1) throw ValidationError("gibbs: iterations must be >= 1");
  if (c.burn_in < 0) throw ValidationError("gibbs: burn_in must be >= 0");
  if (c.burn_in >= c.iterations)
    throw ValidationError("gibbs: burn_in must be < iterations");
  if (c.thin < 1) throw ValidationError("gibbs: thin must be >= 1");
}

void check_spec(const ModelSpec& spec) {
  if (!(spec.sigma_beta_sq > 0.0))
    throw ValidationError("spec: sigma_beta_sq must be positive");
  if (spec.overdispersion == Overdispersion::kLognormalPoisson) {
    for (const IgParams& ig : {spec.ig_c, spec.ig_t}) {
      if (!(ig.alpha > 0.0) || !(ig.nu > 0.0))
        throw ValidationError("spec: inverse-gamma hyperparameters must be positive");
    }
  }
}

}  // namespace

ParameterState chain_state(const Chain& chain, int r, int n) {
  if (r < 0 || r >= chain.r())
    throw ValidationError("chain_state: draw index out of range");
  ParameterState s = chain.draws[r];
  if (s.eps_c.size() == 0) s.eps_c = Eigen::VectorXd::Ones(n);
  if (s.eps_t.size() == 0) s.eps_t = Eigen::VectorXd::Ones(n);
  return s;
}

NormalLaw eps_conditional(const Dataset& d, const ModelSpec& spec,
                          const Eigen::VectorXd& beta, double sigma_sq, int i,
                          int arm) {
  if (arm != 0 && arm != 1) throw ValidationError("eps_conditional: arm must be 0 or 1");
  if (!(sigma_sq > 0.0))
    throw NumericError("eps_conditional: sigma_sq must be positive");
  NormalLaw prior{0.0, sigma_sq};
  if (d.w[i] != arm) return prior;

  double y = static_cast<double>(d.y_obs[i]);
  if (d.y_obs[i] == 0) {
    switch (spec.zero_policy) {
      case ZeroPolicy::kError:
        throw ValidationError("eps_conditional: zero count at unit " +
                              std::to_string(i) + " (zero_policy = error)");
      case ZeroPolicy::kDropRow:
        return prior;
      case ZeroPolicy::kContinuity:
        y = 0.5;
        break;
    }
  }
  const int p = d.k() + 1;
  const double xb = d.x.row(i).dot(arm == 0 ? beta.head(p) : beta.tail(p));
  NormalLaw law;
  law.variance = 1.0 / (y + 1.0 / sigma_sq);
  law.mean = -y * (xb - std::log(y)) * law.variance;
  return law;
}

IgParams hyper_conditional(const IgParams& prior,
                           const Eigen::VectorXd& log_eps) {
  IgParams post;
  post.alpha = prior.alpha + 0.5 * static_cast<double>(log_eps.size());
  post.nu = prior.nu + 0.5 * log_eps.squaredNorm();
  return post;
}

double draw_inverse_gamma(const IgParams& params, RngStream& rng) {
  if (!(params.alpha > 0.0) || !(params.nu > 0.0))
    throw NumericError("draw_inverse_gamma: parameters must be positive");
  return 1.0 / rng.next_gamma(params.alpha, 1.0 / params.nu);
}

Chain run_chain(const Dataset& d, const ModelSpec& spec,
                const GibbsConfig& config) {
  validate(d);
  check_config(config);
  check_spec(spec);
  const auto t0 = std::chrono::steady_clock::now();
  const int n = d.n();
  const int dim = 2 * (d.k() + 1);
  const bool lognormal =
      spec.overdispersion == Overdispersion::kLognormalPoisson;

  Chain chain;
  chain.spec = spec;
  chain.config = config;
  chain.draws.reserve((config.iterations - config.burn_in + config.thin - 1) /
                      config.thin);

  RngStream root(config.seed);
  RngStream init_stream = root.split(kInitTag);
  RngStream beta_stream = root.split(kBetaTag);
  RngStream eps_root = root.split(kEpsTag);
  RngStream hyper_root = root.split(kHyperTag);

  ParameterState state = make_unit_state(n, dim);
  if (lognormal) {
    state.sigma_c_sq = draw_inverse_gamma(spec.ig_c, init_stream);
    state.sigma_t_sq = draw_inverse_gamma(spec.ig_t, init_stream);
  }

  // Under Poisson the conditional of beta never changes; fit once.
  GaussianPosterior fixed_post;
  if (!lognormal) fixed_post = fit_beta_posterior(d, spec, state);

  // iterations counts total sweeps; the first burn_in are discarded and the
  // rest thinned, so R = ceil((iterations - burn_in) / thin).
  Eigen::VectorXd log_eps_c(n), log_eps_t(n);
  for (int sweep = 0; sweep < config.iterations; ++sweep) {
    if (config.max_seconds > 0.0) {
      const std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
      if (el.count() > config.max_seconds) {
        chain.timed_out = true;
        break;
      }
    }
    if (lognormal) {
      const GaussianPosterior post = fit_beta_posterior(d, spec, state);
      state.beta = sample_beta(post, beta_stream);

      RngStream sweep_eps = eps_root.split(static_cast<std::uint64_t>(sweep));
      for (int i = 0; i < n; ++i) {
        for (int arm = 0; arm < 2; ++arm) {
          const double sigma_sq = arm == 0 ? state.sigma_c_sq : state.sigma_t_sq;
          const NormalLaw law =
              eps_conditional(d, spec, state.beta, sigma_sq, i, arm);
          RngStream cell = sweep_eps.split(2 * static_cast<std::uint64_t>(i) + arm);
          const double log_eps =
              law.mean + std::sqrt(law.variance) * cell.next_normal();
          if (arm == 0) {
            log_eps_c[i] = log_eps;
            state.eps_c[i] = std::exp(log_eps);
          } else {
            log_eps_t[i] = log_eps;
            state.eps_t[i] = std::exp(log_eps);
          }
        }
      }

      RngStream sweep_hyper = hyper_root.split(static_cast<std::uint64_t>(sweep));
      state.sigma_c_sq =
          draw_inverse_gamma(hyper_conditional(spec.ig_c, log_eps_c), sweep_hyper);
      state.sigma_t_sq =
          draw_inverse_gamma(hyper_conditional(spec.ig_t, log_eps_t), sweep_hyper);
    } else {
      state.beta = sample_beta(fixed_post, beta_stream);
    }
    ++chain.sweeps_done;

    if (sweep >= config.burn_in &&
        (sweep - config.burn_in) % config.thin == 0) {
      ParameterState kept = state;
      if (!lognormal) {
        kept.eps_c.resize(0);  // pinned at one; chain_state restores
        kept.eps_t.resize(0);
      }
      chain.draws.push_back(std::move(kept));
    }
  }
  chain.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return chain;
}

}  // namespace countpo

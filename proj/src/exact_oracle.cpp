#include "countpo/exact_oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "countpo/beta_posterior.hpp"
#include "countpo/errors.hpp"

namespace countpo {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr std::uint64_t kInitTag = 0;
constexpr std::uint64_t kBetaTag = 1;
constexpr std::uint64_t kEpsTag = 2;
constexpr std::uint64_t kHyperTag = 3;

constexpr double kBetaTargetRate = 0.30;  // multivariate random walk
constexpr double kEpsTargetRate = 0.44;   // scalar random walk
constexpr int kAdaptBatch = 100;

double ig_log_density(const IgParams& ig, double x) {
  return ig.alpha * std::log(ig.nu) - std::lgamma(ig.alpha) -
         (ig.alpha + 1.0) * std::log(x) - ig.nu / x;
}

// One-unit Poisson log-likelihood term, with the proposal-rejection guard on
// runaway predictors: beyond |xi| = 700 the step is treated as log-density
// -inf rather than an error, which truncates an exp(-exp(700))-mass region.
double pois_term(double y, double xi) {
  if (std::fabs(xi) > 700.0) return -std::numeric_limits<double>::infinity();
  return y * xi - std::exp(xi);
}

}  // namespace

double log_posterior(const Dataset& d, const ModelSpec& spec,
                     const ParameterState& state, bool likelihood_enabled) {
  validate_state(d, spec, state);
  const int n = d.n();
  double lp = 0.0;
  if (likelihood_enabled) {
    const auto [xi_obs, xi_mis] = linear_predictors(d, state);
    (void)xi_mis;
    for (int i = 0; i < n; ++i) {
      const double y = static_cast<double>(d.y_obs[i]);
      lp += y * xi_obs[i] - std::exp(xi_obs[i]) - std::lgamma(y + 1.0);
    }
  }
  const int dim = static_cast<int>(state.beta.size());
  lp += -0.5 * state.beta.squaredNorm() / spec.sigma_beta_sq -
        0.5 * dim * (kLogTwoPi + std::log(spec.sigma_beta_sq));
  if (spec.overdispersion == Overdispersion::kLognormalPoisson) {
    const Eigen::VectorXd log_ec = state.eps_c.array().log();
    const Eigen::VectorXd log_et = state.eps_t.array().log();
    lp += -0.5 * n * (kLogTwoPi + std::log(state.sigma_c_sq)) -
          0.5 * log_ec.squaredNorm() / state.sigma_c_sq;
    lp += -0.5 * n * (kLogTwoPi + std::log(state.sigma_t_sq)) -
          0.5 * log_et.squaredNorm() / state.sigma_t_sq;
    lp += ig_log_density(spec.ig_c, state.sigma_c_sq);
    lp += ig_log_density(spec.ig_t, state.sigma_t_sq);
  }
  return lp;
}

OracleResult run_oracle(const Dataset& d, const ModelSpec& spec,
                        const OracleConfig& config) {
  validate(d);
  if (config.iterations < 1) throw ValidationError("oracle: iterations must be >= 1");
  if (config.burn_in < 0) throw ValidationError("oracle: burn_in must be >= 0");
  if (config.burn_in >= config.iterations)
    throw ValidationError("oracle: burn_in must be < iterations");
  if (config.thin < 1) throw ValidationError("oracle: thin must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const int n = d.n();
  const int p = d.k() + 1;
  const int dim = 2 * p;
  const bool lognormal =
      spec.overdispersion == Overdispersion::kLognormalPoisson;
  const bool lik = config.likelihood_enabled;

  // Preconditioner: Cholesky of the approximate posterior precision at unit
  // overdispersion (any fixed SPD matrix keeps the kernel exact).
  ModelSpec precond_spec = spec;
  precond_spec.zero_policy = ZeroPolicy::kDropRow;
  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(dim);
  SpdFactor prop_factor;
  {
    const ParameterState unit = make_unit_state(n, dim);
    try {
      const GaussianPosterior pre = fit_beta_posterior(d, precond_spec, unit);
      prop_factor = pre.factor;
      if (lik) beta0 = pre.mean;
    } catch (const std::exception&) {
      prop_factor = SpdFactor::factorize(
          Eigen::MatrixXd::Identity(dim, dim) / spec.sigma_beta_sq);
    }
  }

  RngStream root(config.seed);
  RngStream beta_stream = root.split(kBetaTag);
  RngStream eps_stream = root.split(kEpsTag);
  RngStream hyper_stream = root.split(kHyperTag);

  ParameterState state = make_unit_state(n, dim);
  state.beta = beta0;
  Eigen::VectorXd eta_c = Eigen::VectorXd::Zero(n);  // log eps
  Eigen::VectorXd eta_t = Eigen::VectorXd::Zero(n);
  if (lognormal) {
    state.sigma_c_sq = spec.ig_c.nu / (spec.ig_c.alpha + 1.0);  // prior mode
    state.sigma_t_sq = spec.ig_t.nu / (spec.ig_t.alpha + 1.0);
  }

  Eigen::VectorXd xb_c = d.x * state.beta.head(p);
  Eigen::VectorXd xb_t = d.x * state.beta.tail(p);

  const auto unit_loglik = [&](int i, const Eigen::VectorXd& bc,
                               const Eigen::VectorXd& bt) {
    if (!lik) return 0.0;
    const double y = static_cast<double>(d.y_obs[i]);
    const double xi = d.w[i] == 0 ? bc[i] + eta_c[i] : bt[i] + eta_t[i];
    return pois_term(y, xi);
  };

  double cur_lik = 0.0;
  for (int i = 0; i < n; ++i) cur_lik += unit_loglik(i, xb_c, xb_t);

  double log_beta_step = std::log(config.beta_step);
  double log_eps_step = std::log(config.eps_step);

  OracleResult result;
  result.chain.spec = spec;
  result.chain.config = GibbsConfig{config.iterations, config.burn_in,
                                    config.thin, config.seed,
                                    config.max_seconds};
  result.chain.draws.reserve((config.iterations - config.burn_in +
                              config.thin - 1) / config.thin);

  // iterations counts total MH sweeps, burn-in included, mirroring GibbsConfig.
  const int total = config.iterations;
  long beta_acc_post = 0, beta_tot_post = 0;
  long eps_acc_post = 0, eps_tot_post = 0;
  int beta_acc_batch = 0, eps_acc_batch = 0, eps_tot_batch = 0;
  int batch_no = 0;

  Eigen::VectorXd beta_prop(dim), xb_c_prop(n), xb_t_prop(n);
  const Eigen::VectorXd zero_mean = Eigen::VectorXd::Zero(dim);
  for (int it = 0; it < total; ++it) {
    if (config.max_seconds > 0.0 && (it & 255) == 0) {
      const std::chrono::duration<double> el =
          std::chrono::steady_clock::now() - t0;
      if (el.count() > config.max_seconds) {
        result.chain.timed_out = true;
        break;
      }
    }
    if ((it & 8191) == 0 && lik) {
      // Refresh the running likelihood; incremental updates drift slowly.
      cur_lik = 0.0;
      for (int i = 0; i < n; ++i) cur_lik += unit_loglik(i, xb_c, xb_t);
    }
    const bool in_burn = it < config.burn_in;

    // --- beta: preconditioned random-walk Metropolis ---
    const double bstep = std::exp(log_beta_step);
    beta_prop = state.beta +
                bstep * prop_factor.sample_gaussian_precision(zero_mean, beta_stream);
    xb_c_prop = d.x * beta_prop.head(p);
    xb_t_prop = d.x * beta_prop.tail(p);
    double prop_lik = 0.0;
    for (int i = 0; i < n; ++i) prop_lik += unit_loglik(i, xb_c_prop, xb_t_prop);
    double delta = prop_lik - cur_lik +
                   (state.beta.squaredNorm() - beta_prop.squaredNorm()) /
                       (2.0 * spec.sigma_beta_sq);
    if (std::log(1.0 - beta_stream.next_uniform()) < delta) {
      state.beta = beta_prop;
      xb_c.swap(xb_c_prop);
      xb_t.swap(xb_t_prop);
      cur_lik = prop_lik;
      if (in_burn) ++beta_acc_batch;
      else ++beta_acc_post;
    }
    if (!in_burn) ++beta_tot_post;

    if (lognormal) {
      // --- log eps: Metropolis on the active arm, conjugate draw on the
      // inactive arm ---
      const double estep = std::exp(log_eps_step);
      for (int i = 0; i < n; ++i) {
        const int active = d.w[i];
        for (int arm = 0; arm < 2; ++arm) {
          Eigen::VectorXd& eta = arm == 0 ? eta_c : eta_t;
          const double sigma_sq =
              arm == 0 ? state.sigma_c_sq : state.sigma_t_sq;
          if (arm != active || !lik) {
            eta[i] = std::sqrt(sigma_sq) * eps_stream.next_normal();
            continue;
          }
          const double y = static_cast<double>(d.y_obs[i]);
          const double xb = arm == 0 ? xb_c[i] : xb_t[i];
          const double cur = eta[i];
          const double prop = cur + estep * eps_stream.next_normal();
          const double t_cur = pois_term(y, xb + cur);
          const double t_prop = pois_term(y, xb + prop);
          const double dl =
              t_prop - t_cur + (cur * cur - prop * prop) / (2.0 * sigma_sq);
          if (std::log(1.0 - eps_stream.next_uniform()) < dl) {
            cur_lik += t_prop - t_cur;
            eta[i] = prop;
            if (in_burn) ++eps_acc_batch;
            else ++eps_acc_post;
          }
          if (in_burn) ++eps_tot_batch;
          else ++eps_tot_post;
        }
      }
      state.eps_c = eta_c.array().exp();
      state.eps_t = eta_t.array().exp();

      // --- variance hyperparameters: shared conjugate path ---
      state.sigma_c_sq = draw_inverse_gamma(
          hyper_conditional(spec.ig_c, eta_c), hyper_stream);
      state.sigma_t_sq = draw_inverse_gamma(
          hyper_conditional(spec.ig_t, eta_t), hyper_stream);
    }

    // --- Robbins-Monro step adaptation, burn-in only ---
    if (config.adapt && in_burn && (it + 1) % kAdaptBatch == 0) {
      ++batch_no;
      const double gain = 1.0 / std::sqrt(static_cast<double>(batch_no));
      const double beta_rate =
          static_cast<double>(beta_acc_batch) / kAdaptBatch;
      log_beta_step += gain * (beta_rate - kBetaTargetRate);
      beta_acc_batch = 0;
      if (lognormal && eps_tot_batch > 0) {
        const double eps_rate =
            static_cast<double>(eps_acc_batch) / eps_tot_batch;
        log_eps_step += gain * (eps_rate - kEpsTargetRate);
        eps_acc_batch = 0;
        eps_tot_batch = 0;
      }
    }

    if (it >= config.burn_in && (it - config.burn_in) % config.thin == 0) {
      ParameterState kept = state;
      if (!lognormal) {
        kept.eps_c.resize(0);
        kept.eps_t.resize(0);
      }
      result.chain.draws.push_back(std::move(kept));
    }
    ++result.chain.sweeps_done;
  }

  if (beta_tot_post > 0 && beta_acc_post == 0)
    throw NumericError("oracle: zero beta acceptance after adaptation");
  result.beta_accept_rate =
      beta_tot_post > 0
          ? static_cast<double>(beta_acc_post) / static_cast<double>(beta_tot_post)
          : 0.0;
  result.eps_accept_rate =
      eps_tot_post > 0
          ? static_cast<double>(eps_acc_post) / static_cast<double>(eps_tot_post)
          : 0.0;
  result.final_beta_step = std::exp(log_beta_step);
  result.final_eps_step = std::exp(log_eps_step);
  result.chain.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

Eigen::VectorXd mcse_batch_means(const std::vector<Eigen::VectorXd>& draws) {
  const int r = static_cast<int>(draws.size());
  if (r < 4) throw ValidationError("mcse_batch_means: need at least 4 draws");
  const int dim = static_cast<int>(draws[0].size());
  const int n_batch = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(r))));
  const int m = r / n_batch;  // batch length; trailing remainder dropped
  Eigen::MatrixXd bm = Eigen::MatrixXd::Zero(n_batch, dim);
  for (int b = 0; b < n_batch; ++b) {
    for (int t = 0; t < m; ++t) bm.row(b) += draws[b * m + t].transpose();
    bm.row(b) /= static_cast<double>(m);
  }
  const Eigen::RowVectorXd center = bm.colwise().mean();
  Eigen::VectorXd mcse(dim);
  for (int j = 0; j < dim; ++j) {
    const double ss = (bm.col(j).array() - center[j]).square().sum() /
                      static_cast<double>(n_batch - 1);
    mcse[j] = std::sqrt(ss / static_cast<double>(n_batch));
  }
  return mcse;
}

}  // namespace countpo

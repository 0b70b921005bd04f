#include <cmath>
#include <vector>

#include "countpo/beta_posterior.hpp"
#include "countpo/errors.hpp"
#include "countpo/poisson_closed_form.hpp"
#include "countpo/quadrature.hpp"
#include "countpo/rng.hpp"
#include "countpo/synthetic.hpp"
#include "doctest.h"

using namespace countpo;

namespace {

// k = 0 dataset whose rows are all dropped: the beta posterior is the bare
// prior, so the missing-predictor law is exactly N(0, sigma_beta^2).
Dataset dropped_all(int n) {
  Dataset d;
  d.x = Eigen::MatrixXd::Ones(n, 1);
  d.y_obs.assign(n, 0);
  d.w.assign(n, 1);
  return d;
}

}  // namespace

TEST_SUITE("closed_form") {

TEST_CASE("standard normal predictor law gives gamma = h = 1") {
  Dataset d = dropped_all(1);
  ModelSpec spec;
  spec.sigma_beta_sq = 1.0;
  spec.zero_policy = ZeroPolicy::kDropRow;
  const GaussianPosterior post =
      fit_beta_posterior(d, spec, make_unit_state(1, 2));
  const NbPredictive pred = gamma_h(d, post, 0);
  CHECK(pred.gamma == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pred.h == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gamma times h equals exp of the predictor mean") {
  SimSpec ss;
  ss.model = SimModel::kSimple;
  ss.n = 60;
  ss.seed = 3;
  Dataset d = generate(ss);
  ModelSpec spec;
  const ParameterState state = make_unit_state(60, 4);
  const GaussianPosterior post = fit_beta_posterior(d, spec, state);
  for (int i = 0; i < d.n(); i += 11) {
    const NbPredictive pred = gamma_h(d, post, i);
    const NormalLaw law = mis_predictor_law(d, state, post, i);
    CHECK(pred.gamma * pred.h ==
          doctest::Approx(std::exp(law.mean)).epsilon(1e-12));
    CHECK(pred.gamma == doctest::Approx(1.0 / law.variance).epsilon(1e-12));
  }
}

TEST_CASE("gamma law matches lognormal moments to the known bias") {
  // The Gamma(gamma, h) surrogate for exp(N(m, v)) has mean e^m while the
  // lognormal mean is e^{m + v/2}; the gap e^m (e^{v/2} - 1) is the price of
  // the approximation.  At v = 0.04 the Monte Carlo must sit within that gap
  // plus noise; at v = 1e-5 the gap is inside the noise floor.
  RngStream r(88);
  const double m = 0.5;
  for (const double v : {0.04, 1e-5}) {
    const int n = 1000000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = std::exp(m + std::sqrt(v) * r.next_normal());
      sum += x;
      sumsq += x * x;
    }
    const double mc_mean = sum / n;
    const double mc_sd = std::sqrt(sumsq / n - mc_mean * mc_mean);
    const double se = mc_sd / std::sqrt(static_cast<double>(n));
    const double gamma_mean = std::exp(m);  // = gamma h with gamma = 1/v
    const double bias = std::exp(m) * (std::exp(0.5 * v) - 1.0);
    CHECK(std::fabs(mc_mean - gamma_mean) <= bias + 3.0 * se);
    if (v < 1e-4) CHECK(std::fabs(mc_mean - gamma_mean) <= 3.0 * se);
  }
}

TEST_CASE("nb pmf closed-form spot values") {
  NbPredictive pred;
  pred.gamma = 1.0;
  pred.h = 1.0;
  CHECK(nb_pmf(pred, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(nb_pmf(pred, 3) == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
  CHECK(nb_pmf(pred, -1) == 0.0);
}

TEST_CASE("nb pmf equals the Poisson-Gamma mixture integral") {
  NbPredictive pred;
  pred.gamma = 2.5;
  pred.h = 0.8;
  for (std::int64_t y = 0; y <= 20; ++y) {
    const double yd = static_cast<double>(y);
    const auto integrand = [&](double mu) {
      if (mu <= 0.0) return 0.0;
      const double log_pois = yd * std::log(mu) - mu - std::lgamma(yd + 1.0);
      const double log_ga = (pred.gamma - 1.0) * std::log(mu) -
                            mu / pred.h - std::lgamma(pred.gamma) -
                            pred.gamma * std::log(pred.h);
      return std::exp(log_pois + log_ga);
    };
    // panel sum: a single wide interval lets the sampler step over the
    // integrand's narrow peak and report a spurious zero
    double mix = 0.0;
    for (double lo = 0.0; lo < 120.0; lo += 10.0)
      mix += integrate(integrand, lo, lo + 10.0, 1e-13);
    CHECK(nb_pmf(pred, y) == doctest::Approx(mix).epsilon(1e-8));
  }
}

TEST_CASE("nb moments: spot values, summation oracle, Poisson limit") {
  NbPredictive pred;
  pred.gamma = 1.0;
  pred.h = 1.0;
  CHECK(nb_moments(pred) == std::pair<double, double>{1.0, 2.0});

  pred.gamma = 4.0;
  pred.h = 0.5;
  const auto [mean, var] = nb_moments(pred);
  CHECK(mean == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(var == doctest::Approx(3.0).epsilon(1e-12));
  const std::int64_t hi = nb_support_bound(pred);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::int64_t y = 0; y <= hi; ++y) {
    const double p = nb_pmf(pred, y);
    s0 += p;
    s1 += static_cast<double>(y) * p;
    s2 += static_cast<double>(y) * static_cast<double>(y) * p;
  }
  CHECK(s0 >= 1.0 - 1e-9);
  CHECK(s1 == doctest::Approx(mean).epsilon(1e-6));
  CHECK(s2 - s1 * s1 == doctest::Approx(var).epsilon(1e-6));

  pred.gamma = 30000.0;
  pred.h = 1e-4;
  const auto [pm, pv] = nb_moments(pred);
  CHECK(pv / pm == doctest::Approx(1.0 + pred.h).epsilon(1e-12));
}

TEST_CASE("support bound certifies the stated mass for hard corners") {
  for (const auto& [g, h] : std::vector<std::pair<double, double>>{
           {0.5, 0.01}, {1.0, 1.0}, {4.0, 0.5}, {1e4, 1e-3}, {0.1, 50.0},
           {2.5, 0.8}, {0.05, 0.02}}) {
    NbPredictive pred;
    pred.gamma = g;
    pred.h = h;
    const std::int64_t hi = nb_support_bound(pred);
    double mass = 0.0;
    for (std::int64_t y = 0; y <= hi; ++y) mass += nb_pmf(pred, y);
    CHECK(mass >= 1.0 - 1e-9);
  }
}

TEST_CASE("ate mean cancels on a symmetric instance") {
  const int n = 40;
  Dataset d;
  d.x = Eigen::MatrixXd::Ones(n, 1);
  d.y_obs.assign(n, 12);
  d.w.resize(n);
  for (int i = 0; i < n; ++i) d.w[i] = i % 2;
  ModelSpec spec;
  spec.sigma_beta_sq = 1e10;
  const GaussianPosterior post =
      fit_beta_posterior(d, spec, make_unit_state(n, 2));
  const ClosedFormAte ate = ate_closed_form(d, post, AteVariant::kNbMoments);
  CHECK(std::fabs(ate.mean) < 1e-6);
}

TEST_CASE("both variants reproduce their defining sums") {
  SimSpec ss;
  ss.model = SimModel::kSimple;
  ss.n = 50;
  ss.seed = 9;
  Dataset d = generate(ss);
  ModelSpec spec;
  const GaussianPosterior post =
      fit_beta_posterior(d, spec, make_unit_state(50, 4));
  for (const AteVariant variant :
       {AteVariant::kNbMoments, AteVariant::kGammaShape}) {
    const ClosedFormAte ate = ate_closed_form(d, post, variant);
    double mean = 0.0, var = 0.0;
    for (int i = 0; i < d.n(); ++i) {
      const double sign = d.w[i] == 1 ? 1.0 : -1.0;
      const double y = static_cast<double>(d.y_obs[i]);
      const double g = ate.gamma[i], h = ate.h[i];
      if (variant == AteVariant::kNbMoments) {
        mean += sign * (y - g * h);
        var += g * h * (1.0 + h);
      } else {
        mean += sign * (y - g);
        var += g * (1.0 - h) / (h * h);
      }
    }
    const double nn = static_cast<double>(d.n());
    CHECK(ate.mean == doctest::Approx(mean / nn).epsilon(1e-12));
    CHECK(ate.variance == doctest::Approx(var / (nn * nn)).epsilon(1e-12));
  }
}

TEST_CASE("the printed variance goes negative once h exceeds one") {
  // h = sigma_beta^2 > 1 on a prior-only fit; the NB-moments variance stays
  // positive on the same instance.
  Dataset d = dropped_all(4);
  ModelSpec spec;
  spec.sigma_beta_sq = 2.0;
  spec.zero_policy = ZeroPolicy::kDropRow;
  const GaussianPosterior post =
      fit_beta_posterior(d, spec, make_unit_state(4, 2));
  const ClosedFormAte printed = ate_closed_form(d, post, AteVariant::kGammaShape);
  CHECK(printed.variance < 0.0);
  const ClosedFormAte nb = ate_closed_form(d, post, AteVariant::kNbMoments);
  CHECK(nb.variance > 0.0);
}

TEST_CASE("degenerate predictor variance is rejected") {
  NbPredictive pred;
  pred.gamma = -1.0;
  pred.h = 1.0;
  CHECK_THROWS_AS((void)nb_pmf(pred, 1), NumericError);
}

}  // TEST_SUITE

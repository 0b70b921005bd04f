#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "countpo/beta_posterior.hpp"
#include "countpo/data.hpp"
#include "countpo/model.hpp"

namespace countpo {

// Pure-Poisson shortcut.  With overdispersion pinned at one, the posterior
// of the missing-side rate mu_mis,i = exp(xi_mis,i) is approximately
// Gamma(gamma_i, h_i) (shape, scale), obtained by matching the Gaussian
// predictor law N(m_i, v_i):
//
//   gamma_i = 1 / v_i,        h_i = v_i exp(m_i).
//
// Mixing the Poisson over that Gamma gives a negative-binomial predictive
// for the missing count, and the average treatment effect has closed-form
// posterior moments.
struct NbPredictive {
  double gamma = 0.0;  // shape
  double h = 0.0;      // scale
  double p() const { return 1.0 / (1.0 + h); }
};

// Requires eps == 1 (Poisson model); the law is taken from
// mis_predictor_law at the unit state.
NbPredictive gamma_h(const Dataset& d, const GaussianPosterior& post, int i);

// P(Y = y) = C(gamma + y - 1, y) p^gamma (1 - p)^y, evaluated in log space.
double nb_pmf(const NbPredictive& pred, std::int64_t y);

// {mean, variance} = {gamma h, gamma h (1 + h)}.
std::pair<double, double> nb_moments(const NbPredictive& pred);

// Smallest truncation point whose omitted upper tail is certified (by a
// geometric tail bound on the pmf ratio) to be below 1e-9.
std::int64_t nb_support_bound(const NbPredictive& pred);

// Two conventions for the closed-form ATE moments.
//
// kNbMoments (default) uses the negative-binomial predictive moments, so the
// closed form is the R -> infinity limit of the imputation estimate:
//   mean = (1/N) sum (2 W_i - 1) (y_i - gamma_i h_i)
//   var  = (1/N^2) sum gamma_i h_i (1 + h_i)
// kGammaShape is the alternative convention with the shape gamma_i in place
// of the predictive mean and variance gamma_i (1 - h_i) / h_i^2; it is kept
// for comparison and can produce a negative variance in small samples.
enum class AteVariant { kNbMoments, kGammaShape };

struct ClosedFormAte {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> gamma;  // per-unit shape
  std::vector<double> h;      // per-unit scale
};

ClosedFormAte ate_closed_form(const Dataset& d, const GaussianPosterior& post,
                              AteVariant variant = AteVariant::kNbMoments);

}  // namespace countpo

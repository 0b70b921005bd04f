#include "countpo/poisson_closed_form.hpp"

#include <cmath>
#include <string>

#include "countpo/errors.hpp"

namespace countpo {

namespace {

NbPredictive gamma_h_at(const Dataset& d, const ParameterState& unit,
                        const GaussianPosterior& post, int i) {
  const NormalLaw law = mis_predictor_law(d, unit, post, i);
  if (!(law.variance > 0.0))
    throw NumericError("gamma_h: predictor variance must be positive (unit " +
                       std::to_string(i) + ")");
  NbPredictive pred;
  pred.gamma = 1.0 / law.variance;
  pred.h = law.variance * std::exp(law.mean);
  return pred;
}

}  // namespace

NbPredictive gamma_h(const Dataset& d, const GaussianPosterior& post, int i) {
  const ParameterState unit = make_unit_state(d.n(), 2 * (d.k() + 1));
  return gamma_h_at(d, unit, post, i);
}

double nb_pmf(const NbPredictive& pred, std::int64_t y) {
  if (!(pred.gamma > 0.0) || !(pred.h > 0.0))
    throw NumericError("nb_pmf: gamma and h must be positive");
  if (y < 0) return 0.0;
  const double yd = static_cast<double>(y);
  const double log_p = -std::log1p(pred.h);            // log 1/(1+h)
  const double log_q = std::log(pred.h) + log_p;       // log h/(1+h)
  const double log_pmf = std::lgamma(pred.gamma + yd) - std::lgamma(pred.gamma) -
                         std::lgamma(yd + 1.0) + pred.gamma * log_p + yd * log_q;
  return std::exp(log_pmf);
}

std::pair<double, double> nb_moments(const NbPredictive& pred) {
  const double mean = pred.gamma * pred.h;
  return {mean, mean * (1.0 + pred.h)};
}

std::int64_t nb_support_bound(const NbPredictive& pred) {
  const auto [mean, var] = nb_moments(pred);
  std::int64_t y = static_cast<std::int64_t>(std::ceil(mean + 12.0 * std::sqrt(var)));
  if (y < 1) y = 1;
  // Successive pmf ratios are q (gamma + y) / (y + 1) with q = h/(1+h);
  // once the ratio is below one the tail beyond y is bounded by
  // pmf(y) * rho / (1 - rho).  Extend until that certificate is under 1e-9/2.
  const double q = pred.h / (1.0 + pred.h);
  for (;;) {
    const double rho = q * (pred.gamma + static_cast<double>(y)) /
                       (static_cast<double>(y) + 1.0);
    if (rho < 1.0) {
      const double tail = nb_pmf(pred, y) * rho / (1.0 - rho);
      if (tail < 0.5e-9) return y;
    }
    ++y;
    if (y > (1LL << 40))
      throw NumericError("nb_support_bound: tail certificate did not close");
  }
}

ClosedFormAte ate_closed_form(const Dataset& d, const GaussianPosterior& post,
                              AteVariant variant) {
  const int n = d.n();
  ClosedFormAte out;
  out.gamma.resize(n);
  out.h.resize(n);
  double mean_sum = 0.0;
  double var_sum = 0.0;
  const ParameterState unit = make_unit_state(n, 2 * (d.k() + 1));
  for (int i = 0; i < n; ++i) {
    const NbPredictive pred = gamma_h_at(d, unit, post, i);
    out.gamma[i] = pred.gamma;
    out.h[i] = pred.h;
    const double sign = d.w[i] == 1 ? 1.0 : -1.0;
    const double y = static_cast<double>(d.y_obs[i]);
    if (variant == AteVariant::kNbMoments) {
      mean_sum += sign * (y - pred.gamma * pred.h);
      var_sum += pred.gamma * pred.h * (1.0 + pred.h);
    } else {
      mean_sum += sign * (y - pred.gamma);
      var_sum += pred.gamma * (1.0 - pred.h) / (pred.h * pred.h);
    }
  }
  out.mean = mean_sum / static_cast<double>(n);
  out.variance = var_sum / (static_cast<double>(n) * static_cast<double>(n));
  return out;
}

}  // namespace countpo

#include "countpo/synthetic.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "countpo/errors.hpp"
#include "countpo/rng.hpp"

namespace countpo {
namespace {

constexpr std::uint64_t kCovariateTag = 0;
constexpr std::uint64_t kEpsTag = 1;
constexpr std::uint64_t kOutcomeTag = 2;
constexpr std::uint64_t kAssignTag = 3;

Eigen::VectorXd to_vector(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int j = 0;
  for (const double x : v) out[j++] = x;
  return out;
}

}  // namespace

Eigen::VectorXd model_beta_c(const SimSpec& spec) {
  switch (spec.model) {
    case SimModel::kSimple:
      return to_vector({3.2, 0.3});
    case SimModel::kComplex:
      return to_vector({3.2, 0.3, 0.7, 1.0, 0.4, 0.8});
    case SimModel::kCustom:
      return spec.beta_c;
  }
  throw ValidationError("model_beta_c: unknown model");
}

Eigen::VectorXd model_beta_t(const SimSpec& spec) {
  switch (spec.model) {
    case SimModel::kSimple:
      return to_vector({3.7, 0.8});
    case SimModel::kComplex:
      return to_vector({3.7, 0.8, 0.5, 1.2, 0.6, 0.9});
    case SimModel::kCustom:
      return spec.beta_t;
  }
  throw ValidationError("model_beta_t: unknown model");
}

Dataset generate(const SimSpec& spec) {
  if (spec.n < 1) throw ValidationError("generate: n must be >= 1");
  if (spec.sigma < 0.0) throw ValidationError("generate: sigma must be >= 0");
  const Eigen::VectorXd beta_c = model_beta_c(spec);
  const Eigen::VectorXd beta_t = model_beta_t(spec);
  if (beta_c.size() < 1 || beta_c.size() != beta_t.size())
    throw ValidationError(
        "generate: coefficient vectors must be non-empty and equally sized");
  const int n = spec.n;
  const int p = static_cast<int>(beta_c.size());

  RngStream root(spec.seed);
  RngStream cov_root = root.split(kCovariateTag);
  RngStream eps_root = root.split(kEpsTag);
  RngStream out_root = root.split(kOutcomeTag);
  RngStream assign_stream = root.split(kAssignTag);

  Dataset d;
  d.x.resize(n, p);
  d.x.col(0).setOnes();
  d.x_names.resize(p);
  d.x_names[0] = "(intercept)";
  for (int j = 1; j < p; ++j) d.x_names[j] = "x" + std::to_string(j);

  std::vector<std::int64_t> y0(n), y1(n);
  for (int i = 0; i < n; ++i) {
    RngStream cov = cov_root.split(static_cast<std::uint64_t>(i));
    for (int j = 1; j < p; ++j) d.x(i, j) = 2.0 * cov.next_uniform() - 1.0;
    double log_eps_c = 0.0;
    double log_eps_t = 0.0;
    if (spec.sigma > 0.0) {
      RngStream eps = eps_root.split(static_cast<std::uint64_t>(i));
      log_eps_c = spec.sigma * eps.next_normal();
      log_eps_t = spec.sigma * eps.next_normal();
    }
    const double xi_c = d.x.row(i).dot(beta_c) + log_eps_c;
    const double xi_t = d.x.row(i).dot(beta_t) + log_eps_t;
    if (!(std::fabs(xi_c) <= 700.0) || !(std::fabs(xi_t) <= 700.0))
      throw NumericError("generate: rate overflow at unit " + std::to_string(i));
    RngStream out = out_root.split(static_cast<std::uint64_t>(i));
    y0[i] = out.next_poisson(std::exp(xi_c));
    y1[i] = out.next_poisson(std::exp(xi_t));
  }

  // Complete randomization: floor(N/2) treated, chosen by partial
  // Fisher-Yates.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int j = n - 1; j >= 1; --j) {
    const int u = static_cast<int>(
        assign_stream.next_below(static_cast<std::uint64_t>(j) + 1));
    std::swap(order[j], order[u]);
  }
  d.w.assign(n, 0);
  for (int t = 0; t < n / 2; ++t) d.w[order[t]] = 1;

  d.y_obs.resize(n);
  for (int i = 0; i < n; ++i) d.y_obs[i] = d.w[i] == 1 ? y1[i] : y0[i];
  d.y0 = std::move(y0);
  d.y1 = std::move(y1);
  return d;
}

double true_ate(const Dataset& d) {
  if (!d.y0 || !d.y1)
    throw ValidationError("true_ate: potential outcomes are not available");
  const int n = d.n();
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += static_cast<double>((*d.y1)[i] - (*d.y0)[i]);
  return sum / static_cast<double>(n);
}

}  // namespace countpo

#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "countpo/data.hpp"

namespace countpo {

// Built-in designs.  kSimple has one covariate, kComplex five, both uniform
// on [-1, 1]; kCustom takes coefficient vectors verbatim.
enum class SimModel { kSimple, kComplex, kCustom };

struct SimSpec {
  SimModel model = SimModel::kSimple;
  int n = 1000;
  double sigma = 0.0;  // sd of log overdispersion; 0 turns it off
  std::uint64_t seed = 1;
  Eigen::VectorXd beta_c;  // kCustom only, length k+1 including intercept
  Eigen::VectorXd beta_t;
};

// Control / treated coefficient vectors of the requested design.
Eigen::VectorXd model_beta_c(const SimSpec& spec);
Eigen::VectorXd model_beta_t(const SimSpec& spec);

// Draws a complete experiment: covariates, arm-wise lognormal overdispersion
// (when sigma > 0), both potential outcomes, and a completely randomized
// treatment with floor(N/2) treated units.  The returned Dataset keeps y0
// and y1, so the realized effect is known.
Dataset generate(const SimSpec& spec);

// (1/N) sum (y1 - y0); requires the potential outcome columns.
double true_ate(const Dataset& d);

}  // namespace countpo

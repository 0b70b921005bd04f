#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace countpo {

// One experiment: covariates with an explicit leading intercept column,
// observed counts, and binary treatment.  Potential outcome columns are
// carried only when known (synthetic data).
//
// The library never adds an intercept implicitly; X's first column must be
// identically one (the loaders construct it).
struct Dataset {
  Eigen::MatrixXd x;                             // N x (k+1)
  std::vector<std::int64_t> y_obs;               // length N, each >= 0
  std::vector<int> w;                            // length N, each 0 or 1
  std::optional<std::vector<std::int64_t>> y0;   // potential outcome under control
  std::optional<std::vector<std::int64_t>> y1;   // potential outcome under treatment
  std::vector<std::string> x_names;              // size k+1, "(intercept)", "x1", ...

  int n() const { return static_cast<int>(x.rows()); }
  int k() const { return static_cast<int>(x.cols()) - 1; }
};

// Shape and content checks; throws ValidationError naming the first offending
// row.
void validate(const Dataset& d);

}  // namespace countpo

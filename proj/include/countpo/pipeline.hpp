#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "countpo/data.hpp"

namespace countpo {

// Minimal delimited-text table: a header row plus string cells.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws ValidationError if absent.
  int col(const std::string& name) const;
};

CsvTable read_csv(const std::string& path, char delim = ',');
void write_csv(const std::string& path, const CsvTable& table,
               char delim = ',');

struct ColumnMap {
  std::string y = "y";
  std::string w = "w";
  std::vector<std::string> x;  // covariate columns; empty = all remaining
};

// Builds a Dataset from a CSV file: y must be a non-negative integer, w in
// {0, 1}, covariates finite.  An intercept column of ones is explicitly
// prepended (the model layer requires one and never adds it itself).
// Malformed cells are reported with 1-based data row numbers.
Dataset load_csv(const std::string& path, const ColumnMap& map = {},
                 char delim = ',');

// Half-open binning [e_0, e_1), [e_1, e_2), ... with labels starting at 1.
// open_left widens the first interval to (-inf, e_1), open_right the last to
// [e_{m-1}, inf).  Values outside the covered range are errors.
struct BinningRule {
  std::vector<double> edges;
  bool open_left = false;
  bool open_right = false;
};

std::vector<int> bin_outcome(const std::vector<double>& values,
                             const BinningRule& rule);

// W_i = 1 iff exposure_i >= threshold.
std::vector<int> dichotomize(const std::vector<double>& exposure,
                             double threshold);

// Group-level summaries of the imputation replications.  For group g and
// replication r the entry is (1/n_g) sum_{i in g} (2 W_i - 1)(y_i - yhat_ri);
// mean and unbiased variance are taken over replications.  weight = n_g / N,
// and the weighted group means recompose the overall ATE exactly.
struct GroupAteRow {
  std::string group;
  int n = 0;
  double weight = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

std::vector<GroupAteRow> groupwise_ate(
    const Dataset& d,
    const std::vector<std::vector<std::int64_t>>& imputations,
    const std::vector<std::string>& group_labels);

// Covariate balance across arms.  smd = (mean1 - mean0) /
// sqrt(var0/n0 + var1/n1); `defined` is false when the pooled variance term
// vanishes.
struct BalanceRow {
  std::string covariate;
  double mean0 = 0.0, mean1 = 0.0;
  double var0 = 0.0, var1 = 0.0;
  double smd = 0.0;
  bool defined = false;
};

std::vector<BalanceRow> balance_table(const Dataset& d);

}  // namespace countpo

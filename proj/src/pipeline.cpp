#include "countpo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "countpo/errors.hpp"

namespace countpo {
namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) cells.push_back(cell);
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_double(const std::string& cell, const std::string& column,
                    int data_row) {
  if (cell.empty())
    throw ValidationError("row " + std::to_string(data_row) + ", column '" +
                          column + "': empty cell");
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw ValidationError("row " + std::to_string(data_row) + ", column '" +
                          column + "': cannot parse '" + cell + "'");
  }
  if (pos != cell.size())
    throw ValidationError("row " + std::to_string(data_row) + ", column '" +
                          column + "': trailing characters in '" + cell + "'");
  if (!std::isfinite(v))
    throw ValidationError("row " + std::to_string(data_row) + ", column '" +
                          column + "': non-finite value");
  return v;
}

std::int64_t parse_count(const std::string& cell, const std::string& column,
                         int data_row) {
  const double v = parse_double(cell, column, data_row);
  const double r = std::nearbyint(v);
  if (std::fabs(v - r) > 1e-9)
    throw ValidationError("row " + std::to_string(data_row) + ", column '" +
                          column + "': count must be an integer, got '" + cell +
                          "'");
  if (r < 0)
    throw ValidationError("row " + std::to_string(data_row) + ", column '" +
                          column + "': count must be non-negative");
  return static_cast<std::int64_t>(r);
}

}  // namespace

int CsvTable::col(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end())
    throw ValidationError("column '" + name + "' not found");
  return static_cast<int>(it - columns.begin());
}

CsvTable read_csv(const std::string& path, char delim) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("'" + path + "': empty file");
  table.columns = split_line(strip_cr(line), delim);
  if (table.columns.empty())
    throw ValidationError("'" + path + "': empty header");
  int data_row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    ++data_row;
    auto cells = split_line(line, delim);
    if (cells.size() != table.columns.size())
      throw ValidationError("'" + path + "': row " + std::to_string(data_row) +
                            " has " + std::to_string(cells.size()) +
                            " cells, header has " +
                            std::to_string(table.columns.size()));
    table.rows.push_back(std::move(cells));
  }
  return table;
}

void write_csv(const std::string& path, const CsvTable& table, char delim) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out << delim;
    out << table.columns[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << delim;
      out << row[j];
    }
    out << '\n';
  }
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

Dataset load_csv(const std::string& path, const ColumnMap& map, char delim) {
  const CsvTable table = read_csv(path, delim);
  const int yc = table.col(map.y);
  const int wc = table.col(map.w);
  std::vector<std::string> x_cols = map.x;
  if (x_cols.empty()) {
    for (const auto& name : table.columns)
      if (name != map.y && name != map.w) x_cols.push_back(name);
  }
  std::vector<int> xi;
  xi.reserve(x_cols.size());
  for (const auto& name : x_cols) xi.push_back(table.col(name));

  const int n = static_cast<int>(table.rows.size());
  if (n == 0) throw ValidationError("'" + path + "': no data rows");
  const int k = static_cast<int>(xi.size());

  Dataset d;
  d.x.resize(n, k + 1);
  d.x.col(0).setOnes();
  d.y_obs.resize(n);
  d.w.resize(n);
  d.x_names.resize(k + 1);
  d.x_names[0] = "(intercept)";
  for (int j = 0; j < k; ++j) d.x_names[j + 1] = x_cols[j];

  for (int i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    d.y_obs[i] = parse_count(row[yc], map.y, i + 1);
    const double wv = parse_double(row[wc], map.w, i + 1);
    if (wv != 0.0 && wv != 1.0)
      throw ValidationError("row " + std::to_string(i + 1) + ", column '" +
                            map.w + "': treatment must be 0 or 1");
    d.w[i] = static_cast<int>(wv);
    for (int j = 0; j < k; ++j)
      d.x(i, j + 1) = parse_double(row[xi[j]], x_cols[j], i + 1);
  }
  validate(d);
  return d;
}

std::vector<int> bin_outcome(const std::vector<double>& values,
                             const BinningRule& rule) {
  const int m = static_cast<int>(rule.edges.size()) - 1;
  if (m < 1)
    throw ValidationError("bin_outcome: need at least two edges");
  for (int j = 0; j < m; ++j) {
    if (!(rule.edges[j] < rule.edges[j + 1]))
      throw ValidationError("bin_outcome: edges must be strictly increasing");
  }
  std::vector<int> labels(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v))
      throw ValidationError("bin_outcome: non-finite value at row " +
                            std::to_string(i + 1));
    if (v < rule.edges.front() && !rule.open_left)
      throw ValidationError("bin_outcome: value " + std::to_string(v) +
                            " at row " + std::to_string(i + 1) +
                            " below the first edge");
    if (v >= rule.edges.back() && !rule.open_right)
      throw ValidationError("bin_outcome: value " + std::to_string(v) +
                            " at row " + std::to_string(i + 1) +
                            " at or above the last edge");
    int label = m;  // open_right overflow lands in the last interval
    for (int j = 0; j < m; ++j) {
      if (v < rule.edges[j + 1]) {
        label = j + 1;
        break;
      }
    }
    labels[i] = label;
  }
  return labels;
}

std::vector<int> dichotomize(const std::vector<double>& exposure,
                             double threshold) {
  std::vector<int> w(exposure.size());
  for (std::size_t i = 0; i < exposure.size(); ++i) {
    if (!std::isfinite(exposure[i]))
      throw ValidationError("dichotomize: non-finite exposure at row " +
                            std::to_string(i + 1));
    w[i] = exposure[i] >= threshold ? 1 : 0;
  }
  return w;
}

std::vector<GroupAteRow> groupwise_ate(
    const Dataset& d,
    const std::vector<std::vector<std::int64_t>>& imputations,
    const std::vector<std::string>& group_labels) {
  const int n = d.n();
  const int r = static_cast<int>(imputations.size());
  if (r < 1) throw ValidationError("groupwise_ate: no imputations");
  if (static_cast<int>(group_labels.size()) != n)
    throw ValidationError("groupwise_ate: group labels length != N");
  for (const auto& rep : imputations)
    if (static_cast<int>(rep.size()) != n)
      throw ValidationError("groupwise_ate: imputation length != N");

  std::map<std::string, std::vector<int>> members;
  for (int i = 0; i < n; ++i) members[group_labels[i]].push_back(i);

  std::vector<GroupAteRow> rows;
  rows.reserve(members.size());
  std::vector<double> per_rep(r);
  for (const auto& [label, idx] : members) {
    GroupAteRow row;
    row.group = label;
    row.n = static_cast<int>(idx.size());
    row.weight = static_cast<double>(row.n) / static_cast<double>(n);
    for (int rep = 0; rep < r; ++rep) {
      double sum = 0.0;
      for (const int i : idx) {
        const double sign = d.w[i] == 1 ? 1.0 : -1.0;
        sum += sign * static_cast<double>(d.y_obs[i] - imputations[rep][i]);
      }
      per_rep[rep] = sum / static_cast<double>(row.n);
    }
    double mean = 0.0;
    for (const double a : per_rep) mean += a;
    mean /= static_cast<double>(r);
    double ss = 0.0;
    for (const double a : per_rep) ss += (a - mean) * (a - mean);
    row.mean = mean;
    row.variance = r > 1 ? ss / static_cast<double>(r - 1)
                         : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<BalanceRow> balance_table(const Dataset& d) {
  validate(d);
  const int n = d.n();
  int n1 = 0;
  for (const int wi : d.w) n1 += wi;
  const int n0 = n - n1;
  if (n0 == 0 || n1 == 0)
    throw ValidationError("balance_table: both arms must be non-empty");

  std::vector<BalanceRow> rows;
  for (int j = 1; j < d.x.cols(); ++j) {
    BalanceRow row;
    row.covariate = static_cast<int>(d.x_names.size()) == d.x.cols()
                        ? d.x_names[j]
                        : "x" + std::to_string(j);
    double s0 = 0.0, s1 = 0.0;
    for (int i = 0; i < n; ++i) (d.w[i] ? s1 : s0) += d.x(i, j);
    row.mean0 = s0 / n0;
    row.mean1 = s1 / n1;
    double q0 = 0.0, q1 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double c = d.x(i, j) - (d.w[i] ? row.mean1 : row.mean0);
      (d.w[i] ? q1 : q0) += c * c;
    }
    row.var0 = n0 > 1 ? q0 / (n0 - 1) : 0.0;
    row.var1 = n1 > 1 ? q1 / (n1 - 1) : 0.0;
    const double denom = row.var0 / n0 + row.var1 / n1;
    if (denom > 0.0) {
      row.smd = (row.mean1 - row.mean0) / std::sqrt(denom);
      row.defined = true;
    } else {
      row.smd = std::numeric_limits<double>::quiet_NaN();
      row.defined = false;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace countpo

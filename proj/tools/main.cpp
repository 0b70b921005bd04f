// countpo command-line front end.
//
// Output contract: one JSON summary on stdout, bulk data in files under
// --out-dir, log lines on stderr.  Result files never contain timings, so a
// rerun with the same seed and thread count is bit-identical; wall-clock
// goes to the run manifest (and, for benchmark, an explicitly non-
// reproducible timings file).  The manifest is written even when a command
// fails.
//
// Exit codes: 0 ok, 1 usage, 2 validation/data error, 3 numeric error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "json.hpp"

#include "countpo/beta_posterior.hpp"
#include "countpo/data.hpp"
#include "countpo/divergence.hpp"
#include "countpo/errors.hpp"
#include "countpo/exact_oracle.hpp"
#include "countpo/gibbs.hpp"
#include "countpo/imputation.hpp"
#include "countpo/model.hpp"
#include "countpo/pipeline.hpp"
#include "countpo/poisson_closed_form.hpp"
#include "countpo/rng.hpp"
#include "countpo/synthetic.hpp"
#include "countpo/version.hpp"

namespace {

using countpo::kVersion;
using countpo::ValidationError;
using json = nlohmann::ordered_json;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Deterministic sub-seed for an internal consumer (chain c, the imputation
// pass, a benchmark cell) so no two consumers share an RNG root.
std::uint64_t subseed(std::uint64_t seed, std::uint64_t tag) {
  return countpo::RngStream(seed).split(tag).next_u64();
}

int default_threads() {
  if (const char* env = std::getenv("COUNTPO_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : csv) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_double_list(const std::string& csv,
                                      const std::string& flag) {
  std::vector<double> out;
  for (const std::string& tok : split_list(csv)) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size())
      throw ValidationError(flag + ": '" + tok + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(flag + ": empty list");
  return out;
}

// ---------------------------------------------------------------------------
// Run manifest

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  json config = json::object();
  std::vector<std::string> outputs;
  json phases = json::object();
  bool ok = false;
  std::string error;
  std::string path;  // where to write it

  void write() const {
    if (path.empty()) return;
    json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["config"] = config;
    j["outputs"] = outputs;
    j["phases"] = phases;
    j["ok"] = ok;
    if (!ok) j["error"] = error;
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) return;  // manifest failure must not mask the primary error
    const std::string text = j.dump(2);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fputc('\n', f);
    std::fclose(f);
  }
};

class PhaseTimer {
 public:
  PhaseTimer(Manifest& man, std::string name)
      : man_(man), name_(std::move(name)),
        t0_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() {
    const std::chrono::duration<double> el =
        std::chrono::steady_clock::now() - t0_;
    man_.phases[name_] = el.count();
  }

 private:
  Manifest& man_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

// Every output file lives under out_dir and is recorded in the manifest.
std::string out_path(Manifest& man, const std::string& dir,
                     const std::string& name) {
  const std::string p = (std::filesystem::path(dir) / name).string();
  man.outputs.push_back(p);
  return p;
}

void emit_summary(const json& j) {
  std::fputs(j.dump(2).c_str(), stdout);
  std::fputc('\n', stdout);
}

void write_json_file(const std::string& path, const json& j) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ValidationError("cannot write '" + path + "'");
  const std::string text = j.dump(2);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fputc('\n', f);
  std::fclose(f);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string model = "simple";
  int n = 1000;
  double sigma = 0.0;
  std::uint64_t seed = 1;
  std::string beta_c, beta_t;
  std::string out = "data.csv";
  std::string truth;  // empty = skip
  std::string out_dir = ".";
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
  CLI::App* cmd = app.add_subcommand(
      "simulate", "Draw a synthetic randomized experiment");
  cmd->add_option("--model", a.model, "simple | complex | custom")
      ->check(CLI::IsMember({"simple", "complex", "custom"}));
  cmd->add_option("--n", a.n, "number of units (must be even)")->required();
  cmd->add_option("--sigma", a.sigma,
                  "sd of the log overdispersion terms (0 = Poisson)");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--beta-c", a.beta_c,
                  "custom model: control coefficients, comma separated");
  cmd->add_option("--beta-t", a.beta_t,
                  "custom model: treated coefficients, comma separated");
  cmd->add_option("--out", a.out, "dataset CSV file name");
  cmd->add_option("--truth", a.truth,
                  "also write the potential outcomes (y0, y1) to this file");
  cmd->add_option("--out-dir", a.out_dir, "directory for all output files");
}

int run_simulate(const SimulateArgs& a, Manifest& man) {
  man.seed = a.seed;
  man.config = {{"model", a.model},     {"n", a.n},
                {"sigma", a.sigma},     {"seed", a.seed},
                {"beta_c", a.beta_c},   {"beta_t", a.beta_t},
                {"out", a.out},         {"truth", a.truth},
                {"out_dir", a.out_dir}};
  if (a.n % 2 != 0)
    throw ValidationError(
        "simulate: --n must be even so both arms have n/2 units");

  countpo::SimSpec spec;
  spec.n = a.n;
  spec.sigma = a.sigma;
  spec.seed = a.seed;
  if (a.model == "simple") spec.model = countpo::SimModel::kSimple;
  if (a.model == "complex") spec.model = countpo::SimModel::kComplex;
  if (a.model == "custom") {
    spec.model = countpo::SimModel::kCustom;
    const std::vector<double> bc = parse_double_list(a.beta_c, "--beta-c");
    const std::vector<double> bt = parse_double_list(a.beta_t, "--beta-t");
    spec.beta_c = Eigen::Map<const Eigen::VectorXd>(bc.data(), bc.size());
    spec.beta_t = Eigen::Map<const Eigen::VectorXd>(bt.data(), bt.size());
  }

  countpo::Dataset d;
  {
    PhaseTimer t(man, "generate_seconds");
    d = countpo::generate(spec);
  }

  PhaseTimer t(man, "write_seconds");
  countpo::CsvTable table;
  table.columns.push_back("y");
  table.columns.push_back("w");
  for (int j = 1; j <= d.k(); ++j) table.columns.push_back(d.x_names[j]);
  table.rows.reserve(d.n());
  for (int i = 0; i < d.n(); ++i) {
    std::vector<std::string> row;
    row.push_back(std::to_string(d.y_obs[i]));
    row.push_back(std::to_string(d.w[i]));
    for (int j = 1; j <= d.k(); ++j) row.push_back(g17(d.x(i, j)));
    table.rows.push_back(std::move(row));
  }
  const std::string data_path = out_path(man, a.out_dir, a.out);
  countpo::write_csv(data_path, table);

  if (!a.truth.empty()) {
    countpo::CsvTable truth;
    truth.columns = {"y0", "y1"};
    for (int i = 0; i < d.n(); ++i)
      truth.rows.push_back({std::to_string((*d.y0)[i]),
                            std::to_string((*d.y1)[i])});
    countpo::write_csv(out_path(man, a.out_dir, a.truth), truth);
  }

  json summary;
  summary["command"] = "simulate";
  summary["n"] = d.n();
  summary["k"] = d.k();
  summary["true_ate"] = countpo::true_ate(d);
  summary["outputs"] = man.outputs;
  summary["manifest"] = man.path;
  emit_summary(summary);
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string data;
  char delim = ',';
  std::string y_col = "y", w_col = "w", x_cols;
  std::string model = "poisson";
  std::string engine = "approx";
  bool closed_form = false;
  std::string variant = "nb";
  int iters = 1000, burn_in = 200, thin = 1, chains = 1;
  std::uint64_t seed = 1;
  double sigma_beta_sq = 100.0;
  std::string zero_policy = "drop";
  double budget_seconds = 0.0;
  bool redraw_beta = false;
  int threads = 0;
  std::string group_col;
  std::string json_out = "fit.json";
  std::string draws_csv, reps_csv, per_unit_csv;
  std::string groups_csv = "groupwise.csv";
  std::string out_dir = ".";
};

void add_fit(CLI::App& app, FitArgs& a) {
  CLI::App* cmd = app.add_subcommand(
      "fit", "Estimate the average treatment effect from a dataset CSV");
  cmd->add_option("--data", a.data, "input CSV")->required();
  cmd->add_option("--delim", a.delim, "CSV delimiter");
  cmd->add_option("--y-col", a.y_col, "outcome column");
  cmd->add_option("--w-col", a.w_col, "treatment column");
  cmd->add_option("--x-cols", a.x_cols,
                  "covariate columns, comma separated (default: all others)");
  cmd->add_option("--model", a.model, "poisson | lognormal-poisson")
      ->check(CLI::IsMember({"poisson", "lognormal-poisson"}));
  cmd->add_option("--engine", a.engine, "approx | exact")
      ->check(CLI::IsMember({"approx", "exact"}));
  cmd->add_flag("--closed-form", a.closed_form,
                "poisson only: closed-form posterior moments, no sampling");
  cmd->add_option("--variant", a.variant,
                  "closed-form moment convention: nb | gamma-shape")
      ->check(CLI::IsMember({"nb", "gamma-shape"}));
  cmd->add_option("--iters", a.iters, "total sweeps, burn-in included");
  cmd->add_option("--burn-in", a.burn_in, "discarded sweeps");
  cmd->add_option("--thin", a.thin, "retain every thin-th sweep");
  cmd->add_option("--chains", a.chains, "independent chains, draws pooled");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--sigma-beta-sq", a.sigma_beta_sq,
                  "prior variance of each coefficient");
  cmd->add_option("--zero-policy", a.zero_policy,
                  "zero counts: error | drop | continuity")
      ->check(CLI::IsMember({"error", "drop", "continuity"}));
  cmd->add_option("--budget-seconds", a.budget_seconds,
                  "soft per-chain deadline; makes outputs timing-dependent");
  cmd->add_flag("--redraw-beta", a.redraw_beta,
                "redraw beta from its conditional at each replication");
  cmd->add_option("--threads", a.threads,
                  "imputation worker threads (default: COUNTPO_THREADS or "
                  "hardware)");
  cmd->add_option("--group-col", a.group_col,
                  "also write per-group effects, grouped by this CSV column");
  cmd->add_option("--json", a.json_out, "summary JSON file name");
  cmd->add_option("--draws-csv", a.draws_csv,
                  "write retained parameter draws to this file");
  cmd->add_option("--reps-csv", a.reps_csv,
                  "write the per-replication ATE vector to this file");
  cmd->add_option("--per-unit-csv", a.per_unit_csv,
                  "closed form: write per-unit gamma and h to this file");
  cmd->add_option("--groups-csv", a.groups_csv,
                  "group-wise output file (with --group-col)");
  cmd->add_option("--out-dir", a.out_dir, "directory for all output files");
}

countpo::ModelSpec model_spec_of(const FitArgs& a) {
  countpo::ModelSpec spec;
  spec.overdispersion = a.model == "poisson"
                            ? countpo::Overdispersion::kPoisson
                            : countpo::Overdispersion::kLognormalPoisson;
  spec.sigma_beta_sq = a.sigma_beta_sq;
  if (a.zero_policy == "error") spec.zero_policy = countpo::ZeroPolicy::kError;
  if (a.zero_policy == "drop") spec.zero_policy = countpo::ZeroPolicy::kDropRow;
  if (a.zero_policy == "continuity")
    spec.zero_policy = countpo::ZeroPolicy::kContinuity;
  return spec;
}

int run_fit(const FitArgs& a, Manifest& man) {
  man.seed = a.seed;
  man.config = {{"data", a.data},
                {"delim", std::string(1, a.delim)},
                {"y_col", a.y_col},
                {"w_col", a.w_col},
                {"x_cols", a.x_cols},
                {"model", a.model},
                {"engine", a.engine},
                {"closed_form", a.closed_form},
                {"variant", a.variant},
                {"iters", a.iters},
                {"burn_in", a.burn_in},
                {"thin", a.thin},
                {"chains", a.chains},
                {"seed", a.seed},
                {"sigma_beta_sq", a.sigma_beta_sq},
                {"zero_policy", a.zero_policy},
                {"budget_seconds", a.budget_seconds},
                {"redraw_beta", a.redraw_beta},
                {"threads", a.threads},
                {"group_col", a.group_col},
                {"out_dir", a.out_dir}};

  if (a.closed_form && a.model != "poisson")
    throw ValidationError(
        "fit: --closed-form requires --model poisson (no closed form exists "
        "under overdispersion)");
  if (a.closed_form && a.engine == "exact")
    throw ValidationError("fit: --closed-form and --engine exact conflict");
  if (a.chains < 1) throw ValidationError("fit: --chains must be >= 1");
  if (a.redraw_beta && !a.group_col.empty())
    throw ValidationError(
        "fit: --group-col cannot be combined with --redraw-beta");

  countpo::ColumnMap map;
  map.y = a.y_col;
  map.w = a.w_col;
  if (!a.x_cols.empty()) map.x = split_list(a.x_cols);
  countpo::Dataset d;
  {
    PhaseTimer t(man, "load_seconds");
    d = countpo::load_csv(a.data, map, a.delim);
  }
  const countpo::ModelSpec spec = model_spec_of(a);
  const int threads = a.threads >= 1 ? a.threads : default_threads();

  json summary;
  summary["command"] = "fit";
  // The summary lands in fit.json, which must be invariant to the thread
  // count; the worker count is run provenance and lives in the manifest.
  json echo = man.config;
  echo.erase("threads");
  summary["config"] = echo;
  summary["n"] = d.n();
  summary["k"] = d.k();

  if (a.closed_form) {
    PhaseTimer t(man, "fit_seconds");
    const countpo::GaussianPosterior post = countpo::fit_beta_posterior(
        d, spec, countpo::make_unit_state(d.n(), 2 * (d.k() + 1)));
    const countpo::AteVariant variant =
        a.variant == "nb" ? countpo::AteVariant::kNbMoments
                          : countpo::AteVariant::kGammaShape;
    const countpo::ClosedFormAte cf =
        countpo::ate_closed_form(d, post, variant);
    summary["ate_mean"] = cf.mean;
    summary["ate_variance"] = cf.variance;
    summary["ate_sd"] = cf.variance >= 0.0
                            ? json(std::sqrt(cf.variance))
                            : json();  // gamma-shape variant can go negative
    summary["rows_used"] = post.rows_used;
    summary["rows_dropped"] = post.rows_dropped;
    if (!a.per_unit_csv.empty()) {
      countpo::CsvTable pu;
      pu.columns = {"unit", "gamma", "h"};
      for (int i = 0; i < d.n(); ++i)
        pu.rows.push_back(
            {std::to_string(i), g17(cf.gamma[i]), g17(cf.h[i])});
      countpo::write_csv(out_path(man, a.out_dir, a.per_unit_csv), pu);
    }
  } else {
    // Sampling path: pool retained draws over chains, then impute.
    countpo::Chain pooled;
    pooled.spec = spec;
    json chain_info = json::array();
    {
      PhaseTimer t(man, "sample_seconds");
      for (int c = 0; c < a.chains; ++c) {
        const std::uint64_t chain_seed = subseed(a.seed, 16 + c);
        if (a.engine == "approx") {
          countpo::GibbsConfig cfg;
          cfg.iterations = a.iters;
          cfg.burn_in = a.burn_in;
          cfg.thin = a.thin;
          cfg.seed = chain_seed;
          cfg.max_seconds = a.budget_seconds;
          countpo::Chain chain = countpo::run_chain(d, spec, cfg);
          chain_info.push_back({{"chain", c},
                                {"sweeps", chain.sweeps_done},
                                {"retained", chain.r()},
                                {"timed_out", chain.timed_out}});
          if (c == 0) pooled.config = chain.config;
          for (auto& s : chain.draws) pooled.draws.push_back(std::move(s));
        } else {
          countpo::OracleConfig cfg;
          cfg.iterations = a.iters;
          cfg.burn_in = a.burn_in;
          cfg.thin = a.thin;
          cfg.seed = chain_seed;
          cfg.max_seconds = a.budget_seconds;
          const countpo::OracleResult res = countpo::run_oracle(d, spec, cfg);
          chain_info.push_back({{"chain", c},
                                {"sweeps", res.chain.sweeps_done},
                                {"retained", res.chain.r()},
                                {"timed_out", res.chain.timed_out},
                                {"beta_accept_rate", res.beta_accept_rate},
                                {"eps_accept_rate", res.eps_accept_rate}});
          if (c == 0) pooled.config = res.chain.config;
          for (auto& s : res.chain.draws)
            pooled.draws.push_back(std::move(s));
        }
      }
    }
    if (pooled.r() < 2)
      throw ValidationError(
          "fit: fewer than 2 retained draws; raise --iters or the budget");

    const std::uint64_t imp_seed = subseed(a.seed, 1);
    countpo::AteEstimate est;
    {
      PhaseTimer t(man, "impute_seconds");
      countpo::ImputationOptions opt;
      opt.redraw_beta = a.redraw_beta;
      opt.threads = threads;
      est = countpo::estimate_ate(d, pooled, imp_seed, opt);
    }
    summary["ate_mean"] = est.mean;
    summary["ate_variance"] = est.variance;
    summary["ate_sd"] = std::sqrt(est.variance);
    summary["r"] = est.r();
    summary["chains"] = chain_info;

    if (!a.reps_csv.empty()) {
      countpo::CsvTable reps;
      reps.columns = {"replication", "ate"};
      for (int r = 0; r < est.r(); ++r)
        reps.rows.push_back({std::to_string(r), g17(est.reps[r])});
      countpo::write_csv(out_path(man, a.out_dir, a.reps_csv), reps);
    }
    if (!a.draws_csv.empty()) {
      const bool lognormal =
          spec.overdispersion == countpo::Overdispersion::kLognormalPoisson;
      countpo::CsvTable dr;
      dr.columns = {"draw"};
      for (const char* arm : {"c", "t"})
        for (int j = 0; j <= d.k(); ++j)
          dr.columns.push_back(std::string("beta_") + arm + "_" +
                               std::to_string(j));
      if (lognormal) {
        dr.columns.push_back("sigma_c_sq");
        dr.columns.push_back("sigma_t_sq");
      }
      for (int r = 0; r < pooled.r(); ++r) {
        std::vector<std::string> row{std::to_string(r)};
        for (int j = 0; j < pooled.draws[r].beta.size(); ++j)
          row.push_back(g17(pooled.draws[r].beta[j]));
        if (lognormal) {
          row.push_back(g17(pooled.draws[r].sigma_c_sq));
          row.push_back(g17(pooled.draws[r].sigma_t_sq));
        }
        dr.rows.push_back(std::move(row));
      }
      countpo::write_csv(out_path(man, a.out_dir, a.draws_csv), dr);
    }
    if (!a.group_col.empty()) {
      // Reproduce the imputation replications (same substream scheme as
      // estimate_ate) and aggregate them by group.
      PhaseTimer t(man, "groupwise_seconds");
      const countpo::CsvTable raw = countpo::read_csv(a.data, a.delim);
      const int gc = raw.col(a.group_col);
      std::vector<std::string> labels;
      labels.reserve(raw.rows.size());
      for (const auto& row : raw.rows) labels.push_back(row[gc]);
      const countpo::RngStream impute_root =
          countpo::RngStream(imp_seed).split(0);
      std::vector<std::vector<std::int64_t>> imputations;
      imputations.reserve(pooled.r());
      for (int r = 0; r < pooled.r(); ++r)
        imputations.push_back(countpo::impute_ymis(
            d, countpo::chain_state(pooled, r, d.n()),
            impute_root.split(static_cast<std::uint64_t>(r))));
      const std::vector<countpo::GroupAteRow> rows =
          countpo::groupwise_ate(d, imputations, labels);
      countpo::CsvTable gt;
      gt.columns = {"group", "n", "weight", "mean", "variance"};
      for (const auto& row : rows)
        gt.rows.push_back({row.group, std::to_string(row.n), g17(row.weight),
                           g17(row.mean), g17(row.variance)});
      countpo::write_csv(out_path(man, a.out_dir, a.groups_csv), gt);
    }
  }

  const std::string json_path = out_path(man, a.out_dir, a.json_out);
  summary["outputs"] = man.outputs;
  summary["manifest"] = man.path;
  write_json_file(json_path, summary);
  emit_summary(summary);
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark

struct BenchmarkArgs {
  std::string n_grid;
  int reps = 3;
  std::string engines = "approx";
  std::string model = "poisson";
  std::string sim = "simple";
  double sigma = 0.0;
  int iters = 1000, burn_in = 200, thin = 1;
  std::uint64_t seed = 1;
  double budget_seconds = 0.0;
  int threads = 0;
  std::string out = "bench.csv";
  std::string timings = "timings.csv";
  std::string out_dir = ".";
};

void add_benchmark(CLI::App& app, BenchmarkArgs& a) {
  CLI::App* cmd = app.add_subcommand(
      "benchmark",
      "Sweep N, run the selected engines on fresh synthetic data, and "
      "record accuracy (bench CSV, reproducible) and wall-clock (timings "
      "CSV, not reproducible by nature)");
  cmd->add_option("--n-grid", a.n_grid, "population sizes, comma separated")
      ->required();
  cmd->add_option("--reps", a.reps, "replications per size");
  cmd->add_option("--engines", a.engines,
                  "comma separated subset of {approx, exact}");
  cmd->add_option("--model", a.model, "poisson | lognormal-poisson")
      ->check(CLI::IsMember({"poisson", "lognormal-poisson"}));
  cmd->add_option("--sim", a.sim, "simulation design: simple | complex")
      ->check(CLI::IsMember({"simple", "complex"}));
  cmd->add_option("--sigma", a.sigma, "overdispersion sd of the data draw");
  cmd->add_option("--iters", a.iters, "sweeps for the sampling engines");
  cmd->add_option("--burn-in", a.burn_in, "discarded sweeps");
  cmd->add_option("--thin", a.thin, "retain every thin-th sweep");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--budget-seconds", a.budget_seconds,
                  "per-cell soft deadline; 0 = none (timeouts are recorded, "
                  "not fatal)");
  cmd->add_option("--threads", a.threads, "imputation worker threads");
  cmd->add_option("--out", a.out, "accuracy CSV file name");
  cmd->add_option("--timings", a.timings, "wall-clock CSV file name");
  cmd->add_option("--out-dir", a.out_dir, "directory for all output files");
}

int run_benchmark(const BenchmarkArgs& a, Manifest& man) {
  man.seed = a.seed;
  man.config = {{"n_grid", a.n_grid},   {"reps", a.reps},
                {"engines", a.engines}, {"model", a.model},
                {"sim", a.sim},         {"sigma", a.sigma},
                {"iters", a.iters},     {"burn_in", a.burn_in},
                {"thin", a.thin},       {"seed", a.seed},
                {"budget_seconds", a.budget_seconds},
                {"threads", a.threads}, {"out_dir", a.out_dir}};
  if (a.reps < 1) throw ValidationError("benchmark: --reps must be >= 1");
  std::vector<int> sizes;
  for (const double v : parse_double_list(a.n_grid, "--n-grid")) {
    if (v < 2.0 || v != std::floor(v))
      throw ValidationError("benchmark: --n-grid entries must be integers >= 2");
    sizes.push_back(static_cast<int>(v));
  }
  const std::vector<std::string> engines = split_list(a.engines);
  for (const std::string& e : engines)
    if (e != "approx" && e != "exact")
      throw ValidationError("benchmark: unknown engine '" + e + "'");
  const bool poisson = a.model == "poisson";
  const int threads = a.threads >= 1 ? a.threads : default_threads();

  countpo::CsvTable bench;
  bench.columns = {"n", "engine", "replication", "ate", "true_ate",
                   "abs_error"};
  countpo::CsvTable timings;
  timings.columns = {"n", "engine", "replication", "seconds", "timed_out"};

  PhaseTimer t(man, "run_seconds");
  std::uint64_t cell = 0;
  for (const int n : sizes) {
    for (int rep = 0; rep < a.reps; ++rep) {
      countpo::SimSpec ss;
      ss.model = a.sim == "simple" ? countpo::SimModel::kSimple
                                   : countpo::SimModel::kComplex;
      ss.n = n;
      ss.sigma = a.sigma;
      ss.seed = subseed(a.seed, 4 * cell);
      const countpo::Dataset d = countpo::generate(ss);
      const double truth = countpo::true_ate(d);
      countpo::ModelSpec spec;
      spec.overdispersion =
          poisson ? countpo::Overdispersion::kPoisson
                  : countpo::Overdispersion::kLognormalPoisson;

      for (const std::string& engine : engines) {
        const auto c0 = std::chrono::steady_clock::now();
        double ate = 0.0;
        bool timed_out = false;
        if (engine == "approx" && poisson) {
          // The closed form is the approximate engine's Poisson fast path.
          const countpo::GaussianPosterior post = countpo::fit_beta_posterior(
              d, spec, countpo::make_unit_state(n, 2 * (d.k() + 1)));
          ate = countpo::ate_closed_form(d, post).mean;
        } else if (engine == "approx") {
          countpo::GibbsConfig cfg;
          cfg.iterations = a.iters;
          cfg.burn_in = a.burn_in;
          cfg.thin = a.thin;
          cfg.seed = subseed(a.seed, 4 * cell + 1);
          cfg.max_seconds = a.budget_seconds;
          const countpo::Chain chain = countpo::run_chain(d, spec, cfg);
          timed_out = chain.timed_out;
          countpo::ImputationOptions opt;
          opt.threads = threads;
          ate = countpo::estimate_ate(d, chain, subseed(a.seed, 4 * cell + 2),
                                      opt)
                    .mean;
        } else {
          countpo::OracleConfig cfg;
          cfg.iterations = a.iters;
          cfg.burn_in = a.burn_in;
          cfg.thin = a.thin;
          cfg.seed = subseed(a.seed, 4 * cell + 1);
          cfg.max_seconds = a.budget_seconds;
          const countpo::OracleResult res = countpo::run_oracle(d, spec, cfg);
          timed_out = res.chain.timed_out;
          countpo::ImputationOptions opt;
          opt.threads = threads;
          ate = countpo::estimate_ate(d, res.chain,
                                      subseed(a.seed, 4 * cell + 2), opt)
                    .mean;
        }
        const std::chrono::duration<double> el =
            std::chrono::steady_clock::now() - c0;
        bench.rows.push_back({std::to_string(n), engine, std::to_string(rep),
                              g17(ate), g17(truth),
                              g17(std::fabs(ate - truth))});
        timings.rows.push_back({std::to_string(n), engine,
                                std::to_string(rep), g17(el.count()),
                                timed_out ? "1" : "0"});
      }
      ++cell;
    }
  }

  countpo::write_csv(out_path(man, a.out_dir, a.out), bench);
  countpo::write_csv(out_path(man, a.out_dir, a.timings), timings);

  json summary;
  summary["command"] = "benchmark";
  summary["cells"] = static_cast<int>(bench.rows.size());
  summary["outputs"] = man.outputs;
  summary["manifest"] = man.path;
  emit_summary(summary);
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose divergence

struct DiagnoseArgs {
  std::string y_grid;
  std::string out = "divergence.csv";
  std::string out_dir = ".";
};

void add_diagnose(CLI::App& app, DiagnoseArgs& a, CLI::App** divergence_cmd) {
  CLI::App* cmd = app.add_subcommand(
      "diagnose", "Numerical diagnostics of the model approximations");
  cmd->require_subcommand(1);
  CLI::App* div = cmd->add_subcommand(
      "divergence",
      "Tabulate the normal/log-Gamma divergence measures over a count grid");
  div->add_option("--y-grid", a.y_grid, "counts, comma separated, each >= 1")
      ->required();
  div->add_option("--out", a.out, "output CSV file name");
  div->add_option("--out-dir", a.out_dir, "directory for all output files");
  *divergence_cmd = div;
}

int run_diagnose(const DiagnoseArgs& a, Manifest& man) {
  man.config = {{"y_grid", a.y_grid}, {"out", a.out}, {"out_dir", a.out_dir}};
  const std::vector<double> grid = parse_double_list(a.y_grid, "--y-grid");
  for (const double y : grid)
    if (!(y >= 1.0))
      throw ValidationError("diagnose: --y-grid entries must be >= 1");

  PhaseTimer t(man, "run_seconds");
  countpo::CsvTable table;
  table.columns = {"y",        "kl_exact",   "kl_leading",
                   "tv_bound", "tv_leading", "tv_empirical"};
  for (const double y : grid) {
    const countpo::DivergenceReport rep = countpo::divergence_report(y);
    table.rows.push_back({g17(rep.y), g17(rep.kl_exact), g17(rep.kl_leading),
                          g17(rep.tv_bound), g17(rep.tv_leading),
                          g17(countpo::empirical_tv(y))});
  }
  countpo::write_csv(out_path(man, a.out_dir, a.out), table);

  json summary;
  summary["command"] = "diagnose divergence";
  summary["rows"] = static_cast<int>(table.rows.size());
  summary["outputs"] = man.outputs;
  summary["manifest"] = man.path;
  emit_summary(summary);
  return 0;
}

// ---------------------------------------------------------------------------
// balance

struct BalanceArgs {
  std::string data;
  char delim = ',';
  std::string y_col = "y", w_col = "w", x_cols;
  std::string out = "balance.csv";
  std::string out_dir = ".";
};

void add_balance(CLI::App& app, BalanceArgs& a) {
  CLI::App* cmd = app.add_subcommand(
      "balance", "Covariate balance table (standardized mean differences)");
  cmd->add_option("--data", a.data, "input CSV")->required();
  cmd->add_option("--delim", a.delim, "CSV delimiter");
  cmd->add_option("--y-col", a.y_col, "outcome column");
  cmd->add_option("--w-col", a.w_col, "treatment column");
  cmd->add_option("--x-cols", a.x_cols,
                  "covariate columns, comma separated (default: all others)");
  cmd->add_option("--out", a.out, "output CSV file name");
  cmd->add_option("--out-dir", a.out_dir, "directory for all output files");
}

int run_balance(const BalanceArgs& a, Manifest& man) {
  man.config = {{"data", a.data},
                {"delim", std::string(1, a.delim)},
                {"y_col", a.y_col},
                {"w_col", a.w_col},
                {"x_cols", a.x_cols},
                {"out", a.out},
                {"out_dir", a.out_dir}};
  countpo::ColumnMap map;
  map.y = a.y_col;
  map.w = a.w_col;
  if (!a.x_cols.empty()) map.x = split_list(a.x_cols);
  const countpo::Dataset d = countpo::load_csv(a.data, map, a.delim);

  PhaseTimer t(man, "run_seconds");
  const std::vector<countpo::BalanceRow> rows = countpo::balance_table(d);
  countpo::CsvTable table;
  table.columns = {"covariate", "mean0", "mean1", "var0",
                   "var1",      "smd",   "defined"};
  for (const auto& r : rows)
    table.rows.push_back({r.covariate, g17(r.mean0), g17(r.mean1),
                          g17(r.var0), g17(r.var1), g17(r.smd),
                          r.defined ? "1" : "0"});
  countpo::write_csv(out_path(man, a.out_dir, a.out), table);

  json summary;
  summary["command"] = "balance";
  summary["n"] = d.n();
  summary["rows"] = static_cast<int>(rows.size());
  summary["outputs"] = man.outputs;
  summary["manifest"] = man.path;
  emit_summary(summary);
  return 0;
}

// ---------------------------------------------------------------------------
// bin

struct BinArgs {
  std::string data;
  char delim = ',';
  std::string col;
  std::string rules;       // JSON file with {"edges": [...], ...}
  double threshold = 0.0;
  bool has_threshold = false;
  std::string label_col = "label";
  std::string out = "binned.csv";
  std::string out_dir = ".";
};

void add_bin(CLI::App& app, BinArgs& a, CLI::Option** thr_opt) {
  CLI::App* cmd = app.add_subcommand(
      "bin",
      "Map a numeric CSV column to outcome labels (bin edges) or to a "
      "binary exposure (threshold), appending the result as a new column");
  cmd->add_option("--data", a.data, "input CSV")->required();
  cmd->add_option("--delim", a.delim, "CSV delimiter");
  cmd->add_option("--col", a.col, "numeric column to transform")->required();
  cmd->add_option("--rules", a.rules,
                  "binning rules JSON: {\"edges\": [..], \"open_left\": "
                  "bool, \"open_right\": bool}");
  *thr_opt = cmd->add_option("--threshold", a.threshold,
                             "dichotomize: label 1 iff value >= threshold");
  cmd->add_option("--label-col", a.label_col, "name of the appended column");
  cmd->add_option("--out", a.out, "output CSV file name");
  cmd->add_option("--out-dir", a.out_dir, "directory for all output files");
}

int run_bin(const BinArgs& a, Manifest& man) {
  man.config = {{"data", a.data},
                {"delim", std::string(1, a.delim)},
                {"col", a.col},
                {"rules", a.rules},
                {"threshold", a.has_threshold ? json(a.threshold) : json()},
                {"label_col", a.label_col},
                {"out", a.out},
                {"out_dir", a.out_dir}};
  if (a.rules.empty() == !a.has_threshold)
    throw ValidationError(
        "bin: exactly one of --rules and --threshold is required");

  countpo::CsvTable table = countpo::read_csv(a.data, a.delim);
  const int src = table.col(a.col);
  for (const std::string& name : table.columns)
    if (name == a.label_col)
      throw ValidationError("bin: column '" + a.label_col +
                            "' already exists");

  std::vector<double> values;
  values.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string& cell = table.rows[i][src];
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size())
      throw ValidationError("bin: row " + std::to_string(i + 1) +
                            ", column '" + a.col + "': '" + cell +
                            "' is not a number");
    values.push_back(v);
  }

  PhaseTimer t(man, "run_seconds");
  std::vector<int> labels;
  if (a.has_threshold) {
    labels = countpo::dichotomize(values, a.threshold);
  } else {
    std::ifstream in(a.rules);
    if (!in) throw ValidationError("bin: cannot open '" + a.rules + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ValidationError("bin: '" + a.rules + "': " + e.what());
    }
    countpo::BinningRule rule;
    if (!j.contains("edges") || !j["edges"].is_array())
      throw ValidationError("bin: rules file needs an \"edges\" array");
    for (const auto& e : j["edges"]) rule.edges.push_back(e.get<double>());
    rule.open_left = j.value("open_left", false);
    rule.open_right = j.value("open_right", false);
    labels = countpo::bin_outcome(values, rule);
  }

  table.columns.push_back(a.label_col);
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    table.rows[i].push_back(std::to_string(labels[i]));
  countpo::write_csv(out_path(man, a.out_dir, a.out), table);

  json summary;
  summary["command"] = "bin";
  summary["rows"] = static_cast<int>(table.rows.size());
  summary["outputs"] = man.outputs;
  summary["manifest"] = man.path;
  emit_summary(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"countpo: treatment effects for count outcomes"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateArgs sim_args;
  FitArgs fit_args;
  BenchmarkArgs bench_args;
  DiagnoseArgs diag_args;
  BalanceArgs bal_args;
  BinArgs bin_args;
  CLI::App* divergence_cmd = nullptr;
  CLI::Option* thr_opt = nullptr;

  add_simulate(app, sim_args);
  add_fit(app, fit_args);
  add_benchmark(app, bench_args);
  add_diagnose(app, diag_args, &divergence_cmd);
  add_balance(app, bal_args);
  add_bin(app, bin_args, &thr_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  bin_args.has_threshold = thr_opt != nullptr && thr_opt->count() > 0;

  Manifest man;
  std::string out_dir = ".";
  int rc = 0;
  try {
    if (app.got_subcommand("simulate")) {
      man.command = "simulate";
      out_dir = sim_args.out_dir;
    } else if (app.got_subcommand("fit")) {
      man.command = "fit";
      out_dir = fit_args.out_dir;
    } else if (app.got_subcommand("benchmark")) {
      man.command = "benchmark";
      out_dir = bench_args.out_dir;
    } else if (app.got_subcommand("diagnose")) {
      man.command = "diagnose divergence";
      out_dir = diag_args.out_dir;
    } else if (app.got_subcommand("balance")) {
      man.command = "balance";
      out_dir = bal_args.out_dir;
    } else {
      man.command = "bin";
      out_dir = bin_args.out_dir;
    }
    std::filesystem::create_directories(out_dir);
    man.path = (std::filesystem::path(out_dir) / "manifest.json").string();

    if (man.command == "simulate") rc = run_simulate(sim_args, man);
    else if (man.command == "fit") rc = run_fit(fit_args, man);
    else if (man.command == "benchmark") rc = run_benchmark(bench_args, man);
    else if (man.command == "diagnose divergence")
      rc = run_diagnose(diag_args, man);
    else if (man.command == "balance") rc = run_balance(bal_args, man);
    else rc = run_bin(bin_args, man);
    man.ok = rc == 0;
    man.write();
    return rc;
  } catch (const countpo::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    man.error = e.what();
    man.write();
    return 2;
  } catch (const countpo::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    man.error = e.what();
    man.write();
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    man.error = e.what();
    man.write();
    return 3;
  }
}

// End-to-end checks of the command-line front end.  Each case shells out to
// the real binary (path baked in at configure time), captures stdout, and
// inspects the files it wrote.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "json.hpp"

#include "countpo/beta_posterior.hpp"
#include "countpo/data.hpp"
#include "countpo/divergence.hpp"
#include "countpo/model.hpp"
#include "countpo/pipeline.hpp"
#include "countpo/poisson_closed_form.hpp"
#include "doctest.h"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string fixture(const std::string& name) {
  return std::string(COUNTPO_FIXTURE_DIR) + "/" + name;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::current_path() / ("cli_scratch_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Runs the CLI with stdout/stderr captured into dir; returns the exit code.
int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string(COUNTPO_CLI_PATH) + " " + args + " > " +
                          (dir / "stdout.txt").string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json summary_of(const fs::path& dir) {
  return json::parse(slurp(dir / "stdout.txt"));
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("simulate writes a loadable dataset whose truth file matches the "
          "reported effect") {
  const fs::path dir = fresh_dir("simulate");
  const int rc = run_cli("simulate --model simple --n 50 --seed 4 "
                         "--out data.csv --truth truth.csv --out-dir " +
                             dir.string(),
                         dir);
  CHECK(rc == 0);
  const json s = summary_of(dir);
  CHECK(s.at("n") == 50);
  CHECK(s.at("k") == 1);

  const countpo::Dataset d =
      countpo::load_csv((dir / "data.csv").string(), countpo::ColumnMap{});
  CHECK(d.n() == 50);
  CHECK(d.k() == 1);

  const countpo::CsvTable truth =
      countpo::read_csv((dir / "truth.csv").string());
  REQUIRE(truth.rows.size() == 50);
  double acc = 0.0;
  for (const auto& row : truth.rows)
    acc += std::stod(row[truth.col("y1")]) - std::stod(row[truth.col("y0")]);
  CHECK(s.at("true_ate").get<double>() ==
        doctest::Approx(acc / 50.0).epsilon(1e-12));

  const json man = json::parse(slurp(dir / "manifest.json"));
  CHECK(man.at("ok") == true);
  CHECK(man.at("command") == "simulate");
}

TEST_CASE("fit --closed-form reproduces the in-process closed form") {
  const fs::path dir = fresh_dir("fit_cf");
  REQUIRE(run_cli("simulate --model simple --n 100 --seed 2 --out d.csv "
                  "--out-dir " +
                      dir.string(),
                  dir) == 0);
  const int rc = run_cli("fit --data " + (dir / "d.csv").string() +
                             " --closed-form --out-dir " + dir.string(),
                         dir);
  CHECK(rc == 0);
  const json s = summary_of(dir);

  const countpo::Dataset d =
      countpo::load_csv((dir / "d.csv").string(), countpo::ColumnMap{});
  const countpo::ModelSpec spec;
  const countpo::GaussianPosterior post = countpo::fit_beta_posterior(
      d, spec, countpo::make_unit_state(d.n(), 2 * (d.k() + 1)));
  const countpo::ClosedFormAte cf = countpo::ate_closed_form(d, post);
  // The CSV round-trips doubles exactly (%.17g), so the numbers must agree
  // to the last bit, not merely to a tolerance.
  CHECK(s.at("ate_mean").get<double>() == cf.mean);
  CHECK(s.at("ate_variance").get<double>() == cf.variance);

  const std::string fit_json = slurp(dir / "fit.json");
  CHECK(json::parse(fit_json).at("ate_mean").get<double>() == cf.mean);
}

TEST_CASE("exit codes: 0 ok, 1 usage, 2 validation, and the failure "
          "manifest records the error") {
  const fs::path dir = fresh_dir("codes");
  CHECK(run_cli("--help", dir) == 0);
  CHECK(run_cli("fit --data x.csv --no-such-flag --out-dir " + dir.string(),
                dir) == 1);
  CHECK(run_cli("simulate --n 201 --out-dir " + dir.string(), dir) == 2);
  const json man = json::parse(slurp(dir / "manifest.json"));
  CHECK(man.at("ok") == false);
  CHECK(man.at("error").get<std::string>().find("even") != std::string::npos);
  CHECK(run_cli("fit --data " + (dir / "absent.csv").string() +
                    " --out-dir " + dir.string(),
                dir) == 2);
  CHECK(run_cli("fit --data " + fixture("toy.csv") +
                    " --closed-form --model lognormal-poisson --out-dir " +
                    dir.string(),
                dir) == 2);
}

TEST_CASE("identical commands give byte-identical result files") {
  const fs::path dir = fresh_dir("determinism");
  const std::string cmd = "fit --data " + fixture("toy.csv") +
                          " --iters 60 --burn-in 20 --seed 12 --chains 2 "
                          "--reps-csv reps.csv --draws-csv draws.csv "
                          "--out-dir " +
                          dir.string();
  REQUIRE(run_cli(cmd, dir) == 0);
  const std::string fit1 = slurp(dir / "fit.json");
  const std::string reps1 = slurp(dir / "reps.csv");
  const std::string draws1 = slurp(dir / "draws.csv");
  REQUIRE(run_cli(cmd, dir) == 0);
  CHECK(slurp(dir / "fit.json") == fit1);
  CHECK(slurp(dir / "reps.csv") == reps1);
  CHECK(slurp(dir / "draws.csv") == draws1);
}

TEST_CASE("group-wise output recomposes the reported effect") {
  const fs::path dir = fresh_dir("groupwise");
  // Group by the treatment column itself: a valid two-group partition that
  // exists in every dataset.
  REQUIRE(run_cli("fit --data " + fixture("toy.csv") +
                      " --iters 80 --burn-in 30 --seed 6 --group-col w "
                      "--out-dir " +
                      dir.string(),
                  dir) == 0);
  const json s = summary_of(dir);
  const countpo::CsvTable g =
      countpo::read_csv((dir / "groupwise.csv").string());
  REQUIRE(g.rows.size() == 2);
  double recomposed = 0.0, weight = 0.0;
  for (const auto& row : g.rows) {
    recomposed +=
        std::stod(row[g.col("weight")]) * std::stod(row[g.col("mean")]);
    weight += std::stod(row[g.col("weight")]);
  }
  CHECK(weight == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(recomposed ==
        doctest::Approx(s.at("ate_mean").get<double>()).epsilon(1e-10));
}

TEST_CASE("bin reproduces the earnings categories and the threshold rule") {
  const fs::path dir = fresh_dir("bin");
  std::ofstream rules(dir / "rules.json");
  rules << "{\"edges\": [0,5,10,15,20,25,30,35,40,45,50,55,60,65]}";
  rules.close();
  REQUIRE(run_cli("bin --data " + fixture("earnings.csv") +
                      " --col earn --rules " + (dir / "rules.json").string() +
                      " --label-col cat --out binned.csv --out-dir " +
                      dir.string(),
                  dir) == 0);
  const countpo::CsvTable b =
      countpo::read_csv((dir / "binned.csv").string());
  const int cat = b.col("cat");
  CHECK(b.rows[0][cat] == "1");  // 0
  CHECK(b.rows[1][cat] == "2");  // 9.9
  CHECK(b.rows[2][cat] == "3");  // 12.4

  REQUIRE(run_cli("bin --data " + fixture("counties.csv") +
                      " --col rate --threshold 70 --label-col w "
                      "--out dich.csv --out-dir " +
                      dir.string(),
                  dir) == 0);
  const countpo::CsvTable c = countpo::read_csv((dir / "dich.csv").string());
  const int w = c.col("w");
  CHECK(c.rows[0][w] == "1");  // 70.0: the threshold is inclusive
  CHECK(c.rows[1][w] == "0");  // 69.999

  // Exactly one of --rules / --threshold.
  CHECK(run_cli("bin --data " + fixture("counties.csv") +
                    " --col rate --out-dir " + dir.string(),
                dir) == 2);
}

TEST_CASE("diagnose divergence tabulates the library's report") {
  const fs::path dir = fresh_dir("diag");
  REQUIRE(run_cli("diagnose divergence --y-grid 2,50 --out-dir " +
                      dir.string(),
                  dir) == 0);
  const countpo::CsvTable t =
      countpo::read_csv((dir / "divergence.csv").string());
  REQUIRE(t.rows.size() == 2);
  const countpo::DivergenceReport rep = countpo::divergence_report(2.0);
  CHECK(std::stod(t.rows[0][t.col("kl_exact")]) == rep.kl_exact);
  CHECK(std::stod(t.rows[0][t.col("tv_bound")]) == rep.tv_bound);
  CHECK(std::stod(t.rows[1][t.col("y")]) == 50.0);

  CHECK(run_cli("diagnose divergence --y-grid 0.5 --out-dir " + dir.string(),
                dir) == 2);
}

TEST_SUITE_END();

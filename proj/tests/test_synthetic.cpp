#include <cmath>

#include "countpo/errors.hpp"
#include "countpo/synthetic.hpp"
#include "doctest.h"

using namespace countpo;

namespace {

// E[exp(a U)] for U uniform on [-1, 1].
double sinhc(double a) { return a == 0.0 ? 1.0 : std::sinh(a) / a; }

}  // namespace

TEST_SUITE("synthetic") {

TEST_CASE("built-in coefficient vectors") {
  SimSpec ss;
  CHECK(model_beta_c(ss)[0] == 3.2);
  CHECK(model_beta_c(ss)[1] == 0.3);
  CHECK(model_beta_t(ss)[0] == 3.7);
  CHECK(model_beta_t(ss)[1] == 0.8);
  ss.model = SimModel::kComplex;
  CHECK(model_beta_c(ss).size() == 6);
  CHECK(model_beta_t(ss).size() == 6);
  CHECK(model_beta_t(ss)[5] == 0.9);
}

TEST_CASE("generated shapes, assignment count, and observed outcomes") {
  SimSpec ss;
  ss.n = 501;  // odd is allowed here; floor(N/2) treated
  ss.seed = 77;
  const Dataset d = generate(ss);
  CHECK(d.n() == 501);
  CHECK(d.k() == 1);
  CHECK(d.x_names[0] == "(intercept)");
  CHECK(d.x_names[1] == "x1");
  int treated = 0;
  for (const int w : d.w) treated += w;
  CHECK(treated == 250);
  REQUIRE(d.y0.has_value());
  REQUIRE(d.y1.has_value());
  for (int i = 0; i < d.n(); ++i) {
    CHECK(d.x(i, 0) == 1.0);
    CHECK(d.x(i, 1) >= -1.0);
    CHECK(d.x(i, 1) <= 1.0);
    CHECK(d.y_obs[i] == (d.w[i] == 1 ? (*d.y1)[i] : (*d.y0)[i]));
  }
}

TEST_CASE("arm means match the analytic uniform-design expectations") {
  SimSpec ss;
  ss.n = 200000;
  ss.seed = 101;
  const Dataset d = generate(ss);
  double m0 = 0.0, m1 = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    m0 += static_cast<double>((*d.y0)[i]);
    m1 += static_cast<double>((*d.y1)[i]);
  }
  m0 /= d.n();
  m1 /= d.n();
  const double e0 = std::exp(3.2) * sinhc(0.3);
  const double e1 = std::exp(3.7) * sinhc(0.8);
  // Unit variances (Poisson plus rate spread) are about 43 and 456, so the
  // means carry se of roughly 0.015 and 0.048 at this N.
  CHECK(std::fabs(m0 - e0) <= 0.08);
  CHECK(std::fabs(m1 - e1) <= 0.25);
  CHECK(std::fabs(true_ate(d) - (e1 - e0)) <= 0.30);
}

TEST_CASE("overdispersion inflates the variance-to-mean ratio") {
  SimSpec ss;
  ss.n = 100000;
  ss.seed = 55;
  const Dataset base = generate(ss);
  ss.sigma = 0.5;
  const Dataset over = generate(ss);
  const auto vm_ratio = [](const std::vector<std::int64_t>& y) {
    double m = 0.0;
    for (const std::int64_t v : y) m += static_cast<double>(v);
    m /= static_cast<double>(y.size());
    double s = 0.0;
    for (const std::int64_t v : y) {
      const double dvi = static_cast<double>(v) - m;
      s += dvi * dvi;
    }
    return s / static_cast<double>(y.size() - 1) / m;
  };
  // Poisson mixed over the covariate already exceeds 1; the lognormal term
  // multiplies the rate spread by exp(sigma^2) - 1 on top.
  const double r_base = vm_ratio(*base.y0);
  const double r_over = vm_ratio(*over.y0);
  CHECK(r_over > 2.0 * r_base);
}

TEST_CASE("degenerate effects come out exactly") {
  SimSpec ss;
  ss.model = SimModel::kCustom;
  ss.n = 4000;
  ss.seed = 5;
  ss.beta_c = Eigen::Vector2d(2.5, 0.4);
  ss.beta_t = Eigen::Vector2d(2.5, 0.4);
  const Dataset same = generate(ss);
  // Same coefficients, same outcome stream: y1 is drawn after y0 from one
  // substream, so equality is distributional, not pathwise.  The per-unit
  // difference variance is about 42.
  CHECK(std::fabs(true_ate(same)) <=
        4.0 * std::sqrt(42.0 / static_cast<double>(ss.n)));
}

TEST_CASE("custom coefficients are used verbatim") {
  SimSpec ss;
  ss.model = SimModel::kCustom;
  ss.n = 50000;
  ss.seed = 9;
  ss.beta_c = Eigen::Vector3d(1.0, 0.2, -0.3);
  ss.beta_t = Eigen::Vector3d(1.4, 0.2, -0.3);
  const Dataset d = generate(ss);
  CHECK(d.k() == 2);
  const double e0 = std::exp(1.0) * sinhc(0.2) * sinhc(-0.3);
  double m0 = 0.0;
  for (const std::int64_t v : *d.y0) m0 += static_cast<double>(v);
  m0 /= d.n();
  CHECK(m0 == doctest::Approx(e0).epsilon(0.03));
}

TEST_CASE("generation is reproducible and seed-sensitive") {
  SimSpec ss;
  ss.n = 300;
  ss.sigma = 0.3;
  ss.seed = 21;
  const Dataset a = generate(ss);
  const Dataset b = generate(ss);
  CHECK(a.y_obs == b.y_obs);
  CHECK(a.w == b.w);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
  ss.seed = 22;
  const Dataset c = generate(ss);
  CHECK(a.y_obs != c.y_obs);
}

TEST_CASE("invalid specs are rejected") {
  SimSpec ss;
  ss.n = 0;
  CHECK_THROWS_AS((void)generate(ss), ValidationError);
  ss.n = 10;
  ss.sigma = -0.1;
  CHECK_THROWS_AS((void)generate(ss), ValidationError);
  ss.sigma = 0.0;
  ss.model = SimModel::kCustom;
  ss.beta_c = Eigen::Vector2d(1.0, 0.5);
  ss.beta_t = Eigen::Vector3d(1.0, 0.5, 0.1);
  CHECK_THROWS_AS((void)generate(ss), ValidationError);
  ss.beta_t = Eigen::Vector2d(710.0, 0.0);
  CHECK_THROWS_WITH_AS((void)generate(ss),
                       doctest::Contains("rate overflow at unit"),
                       NumericError);

  Dataset no_po;
  no_po.x = Eigen::MatrixXd::Ones(2, 1);
  no_po.y_obs = {1, 2};
  no_po.w = {0, 1};
  CHECK_THROWS_AS((void)true_ate(no_po), ValidationError);
}

}  // TEST_SUITE

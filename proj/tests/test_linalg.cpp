#include <cmath>

#include "countpo/errors.hpp"
#include "countpo/linalg.hpp"
#include "countpo/rng.hpp"
#include "doctest.h"

using countpo::RngStream;
using countpo::SpdFactor;

namespace {

Eigen::MatrixXd random_spd(int d, std::uint64_t seed) {
  RngStream r(seed);
  Eigen::MatrixXd b(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) b(i, j) = r.next_normal();
  return b.transpose() * b + static_cast<double>(d) * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("identity behaves as identity") {
  const SpdFactor f = SpdFactor::factorize(Eigen::MatrixXd::Identity(4, 4));
  Eigen::VectorXd b(4);
  b << 1.0, -2.0, 0.5, 3.0;
  CHECK((f.solve(b) - b).norm() == 0.0);
  CHECK(f.quad_form_inv(b) == doctest::Approx(b.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("solve and quadratic form agree with the explicit inverse") {
  const Eigen::MatrixXd a = random_spd(7, 99);
  const SpdFactor f = SpdFactor::factorize(a);
  const Eigen::MatrixXd inv = a.inverse();
  RngStream r(100);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd b(7);
    for (int i = 0; i < 7; ++i) b[i] = r.next_normal();
    const Eigen::VectorXd x = f.solve(b);
    CHECK((a * x - b).norm() <= 1e-9 * b.norm());
    CHECK(f.quad_form_inv(b) ==
          doctest::Approx(b.dot(inv * b)).epsilon(1e-10));
  }
}

TEST_CASE("factor residual is tight") {
  const Eigen::MatrixXd a = random_spd(9, 17);
  const SpdFactor f = SpdFactor::factorize(a);
  const Eigen::MatrixXd l = f.matrix_l();
  const double resid = (l * l.transpose() - a).cwiseAbs().maxCoeff();
  CHECK(resid <= 1e-10 * a.cwiseAbs().maxCoeff());
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(SpdFactor::factorize(Eigen::MatrixXd::Zero(0, 0)),
                  countpo::ValidationError);
  CHECK_THROWS_AS(SpdFactor::factorize(Eigen::MatrixXd::Zero(2, 3)),
                  countpo::ValidationError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.1, 1.0;
  CHECK_THROWS_AS(SpdFactor::factorize(asym), countpo::ValidationError);
  Eigen::MatrixXd nonspd(2, 2);
  nonspd << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(SpdFactor::factorize(nonspd), countpo::NumericError);
  Eigen::MatrixXd nan2 = Eigen::MatrixXd::Identity(2, 2);
  nan2(0, 0) = std::nan("");
  CHECK_THROWS(SpdFactor::factorize(nan2));
}

TEST_CASE("gaussian draws under identity precision have identity covariance") {
  const SpdFactor f = SpdFactor::factorize(Eigen::MatrixXd::Identity(3, 3));
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(3);
  RngStream r(2024);
  const int n = 100000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd z = f.sample_gaussian_precision(mu, r);
    mean += z;
    second += z * z.transpose();
  }
  mean /= n;
  const Eigen::MatrixXd cov = second / n - mean * mean.transpose();
  CHECK((cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("gaussian draws respect a correlated precision") {
  const Eigen::MatrixXd a = random_spd(3, 5);
  const SpdFactor f = SpdFactor::factorize(a);
  Eigen::VectorXd mu(3);
  mu << 1.0, -1.0, 0.25;
  RngStream r(2025);
  const int n = 200000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd z = f.sample_gaussian_precision(mu, r);
    mean += z;
    second += z * z.transpose();
  }
  mean /= n;
  const Eigen::MatrixXd cov = second / n - mean * mean.transpose();
  const Eigen::MatrixXd target = a.inverse();
  CHECK((mean - mu).cwiseAbs().maxCoeff() < 0.01);
  CHECK((cov - target).cwiseAbs().maxCoeff() < 0.05 * target.cwiseAbs().maxCoeff());
}

TEST_CASE("tiny prior variance concentrates draws") {
  const SpdFactor f =
      SpdFactor::factorize(1e12 * Eigen::MatrixXd::Identity(2, 2));
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  RngStream r(9);
  double maxabs = 0.0, sumsq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd z = f.sample_gaussian_precision(mu, r);
    maxabs = std::max(maxabs, z.cwiseAbs().maxCoeff());
    sumsq += z.squaredNorm();
  }
  CHECK(maxabs < 1e-5);
  const double sd = std::sqrt(sumsq / (2.0 * n));
  CHECK(sd == doctest::Approx(1e-6).epsilon(0.05));
}

TEST_CASE("fixed seed gives a bit-identical draw sequence") {
  const Eigen::MatrixXd a = random_spd(4, 21);
  const SpdFactor f = SpdFactor::factorize(a);
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(4);
  RngStream r1(33), r2(33);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd z1 = f.sample_gaussian_precision(mu, r1);
    const Eigen::VectorXd z2 = f.sample_gaussian_precision(mu, r2);
    CHECK((z1 - z2).cwiseAbs().maxCoeff() == 0.0);
  }
}

}  // TEST_SUITE

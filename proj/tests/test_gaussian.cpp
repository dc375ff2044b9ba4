#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "owl/error.hpp"
#include "owl/gaussian.hpp"
#include "owl/rng.hpp"
#include "owl/threshold.hpp"

using namespace owl;

namespace {

double naive_log_density(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const Eigen::VectorXd& x) {
  const double d = static_cast<double>(mean.size());
  const Eigen::VectorXd diff = x - mean;
  const double quad = diff.dot(cov.inverse() * diff);
  return -0.5 * (d * std::log(2 * std::numbers::pi) + std::log(cov.determinant()) + quad);
}

Eigen::MatrixXd random_points(Rng& rng, Eigen::Index n, Eigen::Index d, double spread = 1.0) {
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = spread * (j + 1) * rng.normal() + j;
  return x;
}

}  // namespace

TEST_CASE("fit_gaussian matches the sample mean and unbiased covariance") {
  Rng rng(1);
  const Eigen::MatrixXd x = random_points(rng, 50, 4);
  const Regularization reg{1e-3, false};
  const auto g = fit_gaussian(x, reg);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (Eigen::Index i = 0; i < 50; ++i) mean += x.row(i).transpose() / 50.0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const Eigen::VectorXd c = x.row(i).transpose() - mean;
    cov += c * c.transpose() / 49.0;
  }
  cov += 1e-3 * Eigen::MatrixXd::Identity(4, 4);
  CHECK((g.mean - mean).norm() < 1e-12);
  CHECK((g.covariance - cov).norm() < 1e-12);

  Rng probe(2);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd p(4);
    for (int j = 0; j < 4; ++j) p(j) = 3 * probe.normal();
    CHECK(g.log_density(p) == doctest::Approx(naive_log_density(mean, cov, p)).epsilon(1e-10));
  }
}

TEST_CASE("diagonal covariance equals a full fit restricted to its diagonal") {
  Rng rng(3);
  const Eigen::MatrixXd x = random_points(rng, 30, 3);
  const auto full = fit_gaussian(x, {}, CovarianceKind::full);
  const auto diag = fit_gaussian(x, {}, CovarianceKind::diagonal);
  CHECK(diag.covariance.cols() == 1);
  const Eigen::MatrixXd as_full = full.covariance.diagonal().asDiagonal();
  Eigen::VectorXd p(3);
  p << 0.3, -1.0, 2.0;
  CHECK(diag.log_density(p) == doctest::Approx(naive_log_density(full.mean, as_full, p)).epsilon(1e-10));
}

TEST_CASE("expected log density under its own distribution") {
  // E[log N(x)] for x ~ N = -(d log 2pi + log det + d) / 2.
  Rng rng(9);
  Eigen::MatrixXd a(3, 3);
  a << 2, 0, 0, 0.5, 1, 0, -0.3, 0.2, 0.7;
  GaussianComponent g;
  g.mean = Eigen::Vector3d(1, -2, 0.5);
  g.covariance = a * a.transpose();
  g.kind = CovarianceKind::full;
  refresh_cache(g);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d z(rng.normal(), rng.normal(), rng.normal());
    sum += g.log_density(g.mean + a * z);
  }
  const double expected = -0.5 * (3 * std::log(2 * std::numbers::pi) + std::log(g.covariance.determinant()) + 3);
  CHECK(std::abs(sum / n - expected) < 0.02);
}

TEST_CASE("degenerate fits stay factorizable") {
  Eigen::MatrixXd one(1, 3);
  one << 1, 2, 3;
  const auto g = fit_gaussian(one);
  CHECK(std::isfinite(g.log_density(Eigen::Vector3d(1, 2, 3))));
  Eigen::MatrixXd collinear(4, 2);
  collinear << 0, 0, 1, 1, 2, 2, 3, 3;
  CHECK(std::isfinite(fit_gaussian(collinear).log_density(Eigen::Vector2d(1, -1))));
  CHECK_THROWS_AS(fit_gaussian(Eigen::MatrixXd(0, 2)), DataError);
}

TEST_CASE("gmm log probability is a weighted log-sum-exp") {
  Rng rng(5);
  ClassModel model;
  model.label = "a";
  for (int k = 0; k < 3; ++k) {
    auto g = fit_gaussian(random_points(rng, 20, 2));
    g.weight = (k + 1) / 6.0;
    model.components.push_back(g);
  }
  for (int i = 0; i < 10; ++i) {
    const double x[] = {rng.normal(), rng.normal()};
    const Eigen::Vector2d v(x[0], x[1]);
    double direct = 0.0;
    for (const auto& c : model.components) direct += c.weight * std::exp(c.log_density(v));
    CHECK(gmm_log_prob(model, x) == doctest::Approx(std::log(direct)).epsilon(1e-12));
  }
  // Far away points underflow the direct sum but not the log-sum-exp.
  const double far[] = {1e3, -1e3};
  CHECK(std::isfinite(gmm_log_prob(model, far)));
  const double wrong_dim[] = {1.0};
  CHECK_THROWS_AS(gmm_log_prob(model, wrong_dim), DataError);
}

TEST_CASE("threshold calibration uses the nearest rank") {
  const std::vector<double> scores = {5, 3, 9, 1, 7, 2, 8, 4, 10, 6};
  CHECK(calibrate_threshold(scores, 0.10).value == 1.0);
  CHECK(calibrate_threshold(scores, 0.25).value == 3.0);
  CHECK(calibrate_threshold(scores, 0.30).value == 3.0);
  CHECK(calibrate_threshold(scores, 0.01).value == 1.0);
  const auto t = calibrate_threshold(scores, 0.30);
  CHECK(t.calibration_size == 10);
  CHECK_FALSE(t.is_novel(3.0));
  CHECK(t.is_novel(2.999));
  // Fraction of calibration scores flagged never exceeds the accepted error.
  for (double q : {0.05, 0.1, 0.2, 0.35, 0.5}) {
    const auto th = calibrate_threshold(scores, q);
    const auto flagged = std::count_if(scores.begin(), scores.end(), [&](double s) { return th.is_novel(s); });
    CHECK(static_cast<double>(flagged) / 10.0 <= q + 1e-12);
  }
  CHECK_THROWS_AS(calibrate_threshold({}, 0.1), DataError);
  CHECK_THROWS_AS(calibrate_threshold(scores, 0.0), DataError);
  CHECK_THROWS_AS(calibrate_threshold(scores, 1.0), DataError);
}

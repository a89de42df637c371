#include "helpers.hpp"

#include "artdeform/error.hpp"
#include "artdeform/gmm.hpp"

#include <doctest.h>

#include <random>

using namespace artdeform;

TEST_CASE("single vector gives one floored component") {
  const Eigen::VectorXd v = Eigen::Vector3d(0.5, -1.0, 2.0);
  const GaussianMixture g = fit_gmm({v}, 3);
  REQUIRE(g.components.size() == 1);
  CHECK(g.components[0].mean == v);
  CHECK(g.components[0].variance == Eigen::VectorXd::Constant(3, kVarianceFloor));
  CHECK(g.components[0].weight == 1.0);
}

TEST_CASE("identical vectors: exact mean, floored variance") {
  const Eigen::VectorXd v = Eigen::Vector2d(0.1, 0.2);
  const GaussianMixture g = fit_gmm(std::vector<Eigen::VectorXd>(10, v), 3);
  for (const auto& c : g.components) {
    CHECK(c.mean == v);
    CHECK(c.variance == Eigen::VectorXd::Constant(2, kVarianceFloor));
  }
  double w = 0.0;
  for (const auto& c : g.components) w += c.weight;
  CHECK(w == doctest::Approx(1.0));
}

TEST_CASE("two separated clusters") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<Eigen::VectorXd> data;
  Eigen::VectorXd ca = Eigen::VectorXd::Zero(4), cb = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < 40; ++i) {
    Eigen::VectorXd x(4);
    for (int d = 0; d < 4; ++d) x[d] = n(rng) + (i < 20 ? -3.0 : 3.0);
    (i < 20 ? ca : cb) += x / 20.0;
    data.push_back(x);
  }
  const GaussianMixture g = fit_gmm(data, 2);
  REQUIRE(g.components.size() == 2);
  const bool first_is_a = g.components[0].mean[0] < 0;
  CHECK((g.components[first_is_a ? 0 : 1].mean - ca).cwiseAbs().maxCoeff() < 0.05);
  CHECK((g.components[first_is_a ? 1 : 0].mean - cb).cwiseAbs().maxCoeff() < 0.05);
  CHECK(g.components[0].weight == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::isfinite(g.log_likelihood(data)));
}

TEST_CASE("sampling: floor-only component, Monte Carlo mean, determinism") {
  GaussianMixture tight;
  tight.components.push_back({Eigen::Vector2d(1.0, -2.0), Eigen::Vector2d::Constant(kVarianceFloor), 1.0});
  const Eigen::VectorXd s = sample_gmm(tight, 3);
  CHECK((s - tight.components[0].mean).cwiseAbs().maxCoeff() < 3 * std::sqrt(kVarianceFloor));
  CHECK(sample_gmm(tight, 3) == s);

  GaussianMixture g;
  g.components.push_back({Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.5, 0.2), 0.3});
  g.components.push_back({Eigen::Vector2d(4.0, 5.0), Eigen::Vector2d(0.1, 1.0), 0.7});
  const Eigen::Vector2d analytic = 0.3 * Eigen::Vector2d(1.0, 2.0) + 0.7 * Eigen::Vector2d(4.0, 5.0);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) mean += sample_gmm(g, 1000 + i);
  mean /= n;
  CHECK(std::abs(mean[0] - analytic[0]) < 0.01 * std::abs(analytic[0]));
  CHECK(std::abs(mean[1] - analytic[1]) < 0.01 * std::abs(analytic[1]));
}

TEST_CASE("fit_gmm is deterministic and validates input") {
  std::vector<Eigen::VectorXd> data;
  const Eigen::MatrixXd m = testing_util::random_matrix(3, 15, 2);
  for (int i = 0; i < 15; ++i) data.push_back(m.col(i));
  const GaussianMixture a = fit_gmm(data, 3), b = fit_gmm(data, 3);
  for (std::size_t c = 0; c < a.components.size(); ++c) {
    CHECK(a.components[c].mean == b.components[c].mean);
    CHECK(a.components[c].variance == b.components[c].variance);
  }
  for (const auto& c : a.components) CHECK(c.variance.minCoeff() >= kVarianceFloor);
  CHECK_THROWS_AS(fit_gmm({}, 2), ValidationError);
  CHECK_THROWS_AS(fit_gmm({Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)}, 2), ShapeError);
}

#include <cmath>

#include <doctest.h>

#include "bundlegs/sampling.hpp"

using bundlegs::Rng;
using Eigen::VectorXd;

TEST_CASE("points lie in the ball and follow the radial law r^n") {
  for (int n : {1, 2, 3, 5}) {
    Rng rng(100 + n);
    const VectorXd center = VectorXd::Zero(n);
    const auto pts = bundlegs::sample_ball(center, 1.0, 1000, rng);
    REQUIRE(pts.size() == 1000);
    int inner = 0;
    for (const auto& p : pts) {
      CHECK(p.norm() <= 1.0);
      if (p.norm() <= 0.5) ++inner;
    }
    const double p = std::pow(0.5, n);
    const double se = std::sqrt(p * (1 - p) / 1000.0);
    CAPTURE(n);
    CHECK(std::abs(inner / 1000.0 - p) <= 3 * se);
  }
}

TEST_CASE("uniform in direction: the sample mean is near the center") {
  Rng rng(5);
  const VectorXd center = VectorXd::LinSpaced(4, -1.0, 2.0);
  const auto pts = bundlegs::sample_ball(center, 2.0, 10000, rng);
  VectorXd mean = VectorXd::Zero(4);
  for (const auto& p : pts) {
    CHECK((p - center).norm() <= 2.0);
    mean += p;
  }
  mean /= 10000.0;
  // Each coordinate has variance r^2 / (n + 2) under the uniform ball law.
  const double se = std::sqrt(4.0 / 6.0 / 10000.0);
  CHECK((mean - center).cwiseAbs().maxCoeff() <= 4 * se);
}

TEST_CASE("zero count and determinism") {
  Rng a(1);
  CHECK(bundlegs::sample_ball(VectorXd::Ones(3), 0.5, 0, a).empty());

  Rng b(77), c(77);
  const auto p = bundlegs::sample_ball(VectorXd::Ones(3), 0.5, 20, b);
  const auto q = bundlegs::sample_ball(VectorXd::Ones(3), 0.5, 20, c);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == q[i]);
}

TEST_CASE("invalid arguments") {
  Rng rng(1);
  CHECK_THROWS_AS(bundlegs::sample_ball(VectorXd::Ones(2), 0.0, 3, rng), std::invalid_argument);
  CHECK_THROWS_AS(bundlegs::sample_ball(VectorXd::Ones(2), 1.0, -1, rng), std::invalid_argument);
}

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace bundlegs {

/// Every solver run owns one of these; seeding it fixes the whole run.
using Rng = std::mt19937_64;

/// `count` points drawn independently and uniformly from the closed ball
/// B(center, radius): an isotropic Gaussian direction scaled by
/// radius * U^(1/n).
///
/// Throws std::invalid_argument if radius is not positive or count < 0.
std::vector<Eigen::VectorXd> sample_ball(const Eigen::VectorXd& center, double radius,
                                         int count, Rng& rng);

/// Single-point form of sample_ball.
Eigen::VectorXd sample_ball_point(const Eigen::VectorXd& center, double radius, Rng& rng);

}  // namespace bundlegs

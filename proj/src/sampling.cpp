#include "bundlegs/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace bundlegs {

Eigen::VectorXd sample_ball_point(const Eigen::VectorXd& center, double radius, Rng& rng) {
  if (!(radius > 0.0)) throw std::invalid_argument("sample_ball: radius must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const Eigen::Index n = center.size();
  Eigen::VectorXd dir(n);
  double norm = 0.0;
  // A zero Gaussian draw has probability zero; redraw just in case.
  do {
    for (Eigen::Index i = 0; i < n; ++i) dir(i) = normal(rng);
    norm = dir.norm();
  } while (norm == 0.0);

  const double r = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(n));
  return center + (r / norm) * dir;
}

std::vector<Eigen::VectorXd> sample_ball(const Eigen::VectorXd& center, double radius,
                                         int count, Rng& rng) {
  if (!(radius > 0.0)) throw std::invalid_argument("sample_ball: radius must be positive");
  if (count < 0) throw std::invalid_argument("sample_ball: negative count");
  std::vector<Eigen::VectorXd> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) points.push_back(sample_ball_point(center, radius, rng));
  return points;
}

}  // namespace bundlegs

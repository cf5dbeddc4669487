#pragma once

#include <cstdint>

#include "bundlegs/bgs.hpp"

// Plain gradient sampling: the minimum-norm element of the convex hull of
// sampled gradients gives a normalized descent direction, followed by an
// Armijo backtracking line search. Used as the reference point for
// gradient-evaluation counts.
namespace bundlegs::gs {

struct GsConfig {
  int sample_size = 0;  // 0 means 2n
  double eps0 = 0.1;
  double eps_shrink = 0.1;
  double armijo_beta = 1e-6;
  double armijo_gamma = 0.5;
  /// Initial stationarity target; shrinks together with the radius.
  double stationarity_tol = 1e-6;
  std::uint64_t seed = 0;
  int max_iters = 1000;
  double min_radius = 1e-12;
  int max_backtracks = 50;
  double qp_tol = 1e-10;
  problems::GradientMode gradient;

  int resolved_sample_size(int n) const { return sample_size > 0 ? sample_size : 2 * n; }
  void validate() const;
};

/// Same trace record and stop reasons as the bundle solver. Serious steps
/// are accepted line searches, null steps are radius reductions.
bgs::RunResult gs_run(const problems::ObjectiveOracle& oracle, const GsConfig& config,
                      const Vector& x0, const bgs::RunHooks& hooks = {});

}  // namespace bundlegs::gs

#include "bundlegs/gs_baseline.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bundlegs::gs {

void GsConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("GS config: ") + what);
  };
  require(sample_size >= 0, "sample_size must be nonnegative");
  require(eps0 > 0.0, "eps0 must be positive");
  require(eps_shrink > 0.0 && eps_shrink < 1.0, "eps_shrink must lie in (0, 1)");
  require(armijo_beta > 0.0 && armijo_beta < 1.0, "armijo_beta must lie in (0, 1)");
  require(armijo_gamma > 0.0 && armijo_gamma < 1.0, "armijo_gamma must lie in (0, 1)");
  require(stationarity_tol >= 0.0, "stationarity_tol must be nonnegative");
  require(max_iters >= 0, "max_iters must be nonnegative");
  require(min_radius > 0.0, "min_radius must be positive");
  require(max_backtracks >= 0, "max_backtracks must be nonnegative");
  gradient.validate();
}

bgs::RunResult gs_run(const problems::ObjectiveOracle& oracle, const GsConfig& config,
                      const Vector& x0, const bgs::RunHooks& hooks) {
  config.validate();
  if (x0.size() != oracle.dimension() || !x0.allFinite())
    throw std::invalid_argument("GS: bad starting point");

  const int n = oracle.dimension();
  const int samples = config.resolved_sample_size(n);
  Evaluator eval(oracle, config.gradient);
  Rng rng(config.seed);

  bgs::RunResult result;
  Vector x = x0;
  double f = 0.0;
  double radius = config.eps0;
  double nu = config.stationarity_tol;
  int k = 0;
  auto stop = [&](bgs::StopReason reason, std::string message = {}) {
    result.reason = reason;
    result.message = std::move(message);
  };

  try {
    f = eval.value(x);
    for (;;) {
      if (hooks.stop_at && hooks.stop_at(f)) {
        stop(bgs::StopReason::TargetReached);
        break;
      }
      if (k >= config.max_iters) {
        stop(bgs::StopReason::OuterBudget);
        break;
      }
      if (radius < config.min_radius) {
        stop(bgs::StopReason::RadiusFloor);
        break;
      }

      qp::SimplexQpInstance instance;
      instance.atoms.resize(n, samples + 1);
      instance.errors = Eigen::VectorXd::Zero(samples + 1);
      instance.atoms.col(0) = eval.gradient(x);
      for (int j = 1; j <= samples; ++j)
        instance.atoms.col(j) = eval.gradient(sample_ball_point(x, radius, rng));
      qp::QpOptions qp_options;
      qp_options.tol = config.qp_tol;
      const qp::SimplexQpSolution hull = qp::solve_simplex_qp(instance, qp_options);

      const double g_norm = hull.g_tilde.norm();
      bgs::StepOutcome step;
      step.v = 0.5 * g_norm * g_norm;
      step.w = step.v;
      step.z = -g_norm * g_norm;
      step.direction = Vector::Zero(n);
      const Vector x_k = x;
      const double f_k = f;
      const double tested_radius = radius;

      bgs::StepKind kind = bgs::StepKind::NullStep;
      if (g_norm > nu) {
        step.direction = -hull.g_tilde / g_norm;
        double t = 1.0;
        for (int b = 0; b <= config.max_backtracks; ++b, t *= config.armijo_gamma) {
          const Vector candidate = x_k + t * step.direction;
          const double f_c = eval.value(candidate);
          if (f_c < f_k - config.armijo_beta * t * g_norm) {
            x = candidate;
            f = f_c;
            kind = bgs::StepKind::SeriousStep;
            break;
          }
        }
      }
      if (kind == bgs::StepKind::NullStep) {
        radius *= config.eps_shrink;
        nu *= config.eps_shrink;
      }

      const bgs::IterationTrace rec{k, 0, f, step.v, step.w, tested_radius, kind,
                                    eval.grad_evals()};
      result.trace.push_back(rec);
      if (hooks.on_step) {
        const bgs::AggregateAtom agg{hull.g_tilde, 0.0};
        step.kind = kind;
        hooks.on_step(bgs::StepEvent{rec, x_k, f_k, instance.atoms.col(0), agg, step, 1.0,
                                     step.z, nullptr});
      }
      ++k;
    }
  } catch (const problems::EvaluationError& e) {
    stop(bgs::StopReason::OracleFailure, e.what());
  }

  result.x = x;
  result.f = f;
  result.outer_iterations = k;
  result.grad_evals = eval.grad_evals();
  result.value_evals = eval.value_evals();
  return result;
}

}  // namespace bundlegs::gs

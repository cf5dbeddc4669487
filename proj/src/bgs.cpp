#include "bundlegs/bgs.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bundlegs::bgs {

namespace {

constexpr double kErrorNoise = 1e-12;
constexpr int kFdpMaxTrials = 64;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("solver config: ") + what);
}

// Largest constraint value <g_j, d> - e_j over the QP's atoms.
double model_value(const qp::SimplexQpInstance& instance, const Vector& d) {
  double z = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < instance.size(); ++j)
    z = std::max(z, instance.atoms.col(j).dot(d) - std::max(instance.errors(j), 0.0));
  return z;
}

}  // namespace

SolverConfig SolverConfig::defaults(int n) {
  SolverConfig config;
  config.m = 2 * n;
  return config;
}

void SolverConfig::validate() const {
  require(eps0 > 0.0 && std::isfinite(eps0), "eps0 must be positive");
  require(mu > 0.0 && mu < 1.0, "mu must lie in (0, 1)");
  require(m >= 1, "m must be positive");
  require(beta > 0.0 && beta < 1.0, "beta must lie in (0, 1)");
  require(sigma > 0.0, "sigma must be positive");
  require(alpha > 0.0, "alpha must be positive");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  require(theta >= 0.0 && theta <= 1.0, "theta must lie in [0, 1]");
  require(eps_tol >= 0.0, "eps_tol must be nonnegative");
  require(max_outer >= 0, "max_outer must be nonnegative");
  require(min_radius > 0.0, "min_radius must be positive");
  require(max_inner >= 0, "max_inner must be nonnegative");
  require(qp_tol > 0.0, "qp_tol must be positive");
  gradient.validate();
}

std::string to_string(StepKind kind) {
  switch (kind) {
    case StepKind::SeriousStep: return "serious";
    case StepKind::NullStep: return "null";
    case StepKind::InnerEnrich: return "enrich";
    case StepKind::Converged: return "converged";
  }
  return "unknown";
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "converged";
    case StopReason::TargetReached: return "target";
    case StopReason::OuterBudget: return "budget";
    case StopReason::RadiusFloor: return "radius";
    case StopReason::InnerLimit: return "inner-limit";
    case StopReason::OracleFailure: return "oracle-failure";
  }
  return "unknown";
}

double linearization_error(double f_xk, const Vector& x_k, double f_s, const Vector& s,
                           const Vector& grad_s, bool strict) {
  const double slope = grad_s.dot(x_k - s);
  const double e = f_xk - (f_s + slope);
  if (e >= 0.0) return e;
  const double noise =
      kErrorNoise * (1.0 + std::abs(f_xk) + std::abs(f_s) + std::abs(slope));
  if (strict && e < -noise) {
    std::ostringstream msg;
    msg << "negative linearization error " << e
        << " (objective not convex or gradient inconsistent)";
    throw std::domain_error(msg.str());
  }
  return 0.0;
}

double linearization_error(const ObjectiveOracle& oracle, const GradientMode& mode,
                           const Vector& x_k, double f_xk, const Vector& s) {
  return linearization_error(f_xk, x_k, oracle.value(s), s, problems::gradient(oracle, mode, s),
                             mode.kind == problems::GradientKind::Exact);
}

std::vector<BundleAtom> build_initial_model(Evaluator& eval, const Vector& x_k, double f_xk,
                                            double radius, int m, Rng& rng, bool strict,
                                            bool require_smooth) {
  std::vector<BundleAtom> atoms;
  atoms.reserve(static_cast<std::size_t>(m) + 1);
  atoms.push_back({x_k, eval.gradient(x_k), 0.0});

  for (int j = 1; j <= m; ++j) {
    for (int attempt = 0;; ++attempt) {
      const Vector s = sample_ball_point(x_k, radius, rng);
      try {
        if (require_smooth && !eval.is_smooth(s))
          throw problems::EvaluationError("sampled point is not a differentiable point");
        const double f_s = eval.value(s);
        Vector g = eval.gradient(s);
        const double e = linearization_error(f_xk, x_k, f_s, s, g, strict);
        atoms.push_back({s, std::move(g), e});
        break;
      } catch (const problems::EvaluationError&) {
        if (attempt >= 1) throw;
      }
    }
  }
  return atoms;
}

StepOutcome direction_from_dual(const AggregateAtom& aggregate, double radius, double alpha) {
  const double scale = std::pow(radius, alpha);
  const double gg = aggregate.g_tilde.squaredNorm();
  StepOutcome out;
  out.direction = -scale * aggregate.g_tilde;
  out.z = -scale * gg - aggregate.e_tilde;
  out.v = 0.5 * gg + aggregate.e_tilde;
  out.w = 0.5 * gg + aggregate.e_tilde / scale;
  return out;
}

StepOutcome direction_from_dual(const qp::SimplexQpSolution& solution, double radius,
                                double alpha) {
  return direction_from_dual(AggregateAtom{solution.g_tilde, solution.e_tilde}, radius, alpha);
}

bool sufficient_decrease(double f_trial, double f_xk, double z, double beta) {
  return f_trial - f_xk <= beta * z;
}

bool sufficient_decrease(const ObjectiveOracle& oracle, const Vector& x_k, double f_xk,
                         const Vector& d, double z, double beta) {
  return sufficient_decrease(oracle.value(x_k + d), f_xk, z, beta);
}

FdpResult fdp_perturb(Evaluator& eval, const Vector& x, double f_x, const Vector& d,
                      double f_x_plus_d, double beta, double z, double sigma, FdpMode mode,
                      bool checks, Rng& rng) {
  FdpResult out{x + d, f_x_plus_d, 0, false};
  if (!checks) return out;

  auto acceptable = [&](const Vector& p, double f_p) {
    if (!eval.is_smooth(p)) return false;
    const bool decrease = f_p - f_x <= beta * z;
    return mode == FdpMode::Fdp1 ? decrease : !decrease;
  };

  double radius = sigma;
  while (!acceptable(out.point, out.f_point)) {
    if (out.trials == kFdpMaxTrials) {
      out.capped = true;
      break;
    }
    const Vector x_hat = sample_ball_point(x, radius, rng);
    radius *= 0.5;
    ++out.trials;
    out.point = x_hat + d;
    out.f_point = eval.value(out.point);
  }
  return out;
}

bool improvement_criterion(double e_new, const AggregateAtom& aggregate, double f_gap,
                           double gamma) {
  return e_new <= gamma * aggregate.e_tilde ||
         f_gap <= 0.5 * aggregate.g_tilde.squaredNorm() + aggregate.e_tilde;
}

std::vector<std::size_t> select_indices(std::span<const std::size_t> ids,
                                        std::span<const double> lambda, double theta,
                                        std::span<const std::size_t> forced) {
  if (ids.size() != lambda.size())
    throw std::invalid_argument("select_indices: ids and multipliers differ in length");

  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lambda[a] > lambda[b]; });

  const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  std::vector<std::size_t> kept;
  if (total > 0.0) {
    // Slack so that theta = 1 keeps everything despite rounding in the sums.
    const double limit = theta + 1e-12;
    double cumulative = 0.0;
    for (std::size_t pos : order) {
      cumulative += lambda[pos];
      if (cumulative / total > limit) break;
      kept.push_back(ids[pos]);
    }
  }
  kept.insert(kept.end(), forced.begin(), forced.end());
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  return kept;
}

AggregateAtom aggregate(std::span<const double> lambda, std::span<const BundleAtom> atoms,
                        double prior_weight, const AggregateAtom* prior) {
  if (lambda.size() != atoms.size())
    throw std::invalid_argument("aggregate: multipliers and atoms differ in length");
  if (atoms.empty() && prior == nullptr)
    throw std::invalid_argument("aggregate: nothing to aggregate");

  AggregateAtom out;
  const Eigen::Index n = atoms.empty() ? prior->g_tilde.size() : atoms.front().grad.size();
  out.g_tilde = Vector::Zero(n);
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    out.g_tilde += lambda[j] * atoms[j].grad;
    out.e_tilde += lambda[j] * atoms[j].err;
  }
  if (prior != nullptr) {
    out.g_tilde += prior_weight * prior->g_tilde;
    out.e_tilde += prior_weight * prior->e_tilde;
  }
  return out;
}

namespace {

// Mutable state of one run; keeps run() readable.
class Run {
 public:
  Run(const ObjectiveOracle& oracle, const SolverConfig& config, const RunHooks& hooks)
      : config_(config),
        hooks_(hooks),
        eval_(oracle, config.gradient),
        rng_(config.seed),
        strict_(config.gradient.kind == problems::GradientKind::Exact) {}

  RunResult execute(const Vector& x0) {
    x_ = x0;
    radius_ = config_.eps0;
    try {
      f_ = eval_.value(x_);
      loop();
    } catch (const problems::EvaluationError& e) {
      finish(StopReason::OracleFailure, e.what());
    } catch (const std::domain_error& e) {
      finish(StopReason::OracleFailure, e.what());
    }
    result_.x = x_;
    result_.f = f_;
    result_.outer_iterations = k_;
    result_.grad_evals = eval_.grad_evals();
    result_.value_evals = eval_.value_evals();
    return std::move(result_);
  }

 private:
  void finish(StopReason reason, std::string message = {}) {
    result_.reason = reason;
    result_.message = std::move(message);
  }

  bool target_reached() const { return hooks_.stop_at && hooks_.stop_at(f_); }

  void loop() {
    for (;;) {
      if (target_reached()) return finish(StopReason::TargetReached);
      if (k_ >= config_.max_outer) return finish(StopReason::OuterBudget);
      if (radius_ < config_.min_radius) return finish(StopReason::RadiusFloor);
      if (outer_iteration()) return;
    }
  }

  void emit(int i, StepKind kind, const AggregateAtom& agg, const StepOutcome& step,
            double z_model, const BundleAtom* new_atom, const Vector& x_k, double f_xk,
            const Vector& grad_xk, double radius) {
    IterationTrace rec{k_, i, f_, step.v, step.w, radius, kind, eval_.grad_evals()};
    result_.trace.push_back(rec);
    if (hooks_.on_step) {
      StepOutcome tagged = step;
      tagged.kind = kind;
      hooks_.on_step(StepEvent{rec, x_k, f_xk, grad_xk, agg, tagged,
                               std::pow(radius, config_.alpha), z_model, new_atom});
    }
  }

  // Returns true when the run is over.
  bool outer_iteration() {
    const double radius = radius_;
    const double radius_pow = std::pow(radius, config_.alpha);
    const Vector x_k = x_;
    const double f_xk = f_;

    std::vector<BundleAtom> pool = build_initial_model(
        eval_, x_k, f_xk, radius, config_.m, rng_, strict_, config_.differentiability_checks);
    std::vector<std::size_t> ids(pool.size());
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    const Vector grad_xk = pool.front().grad;

    qp::SimplexQpInstance instance;
    instance.penalty_scale = 1.0 / radius_pow;
    fill_instance(instance, pool, nullptr);
    qp::QpOptions qp_options;
    qp_options.tol = config_.qp_tol;
    const qp::SimplexQpSolution first = qp::solve_simplex_qp(instance, qp_options);

    AggregateAtom agg{first.g_tilde, first.e_tilde};
    StepOutcome step = direction_from_dual(agg, radius, config_.alpha);
    double z_model = model_value(instance, step.direction);
    assert(std::abs(z_model - step.z) <= 1e-8 * (1.0 + std::abs(step.z)));

    const std::size_t keep_always[] = {0};
    std::vector<double> lambda(first.lambda.data(), first.lambda.data() + first.lambda.size());
    std::vector<std::size_t> selected = select_indices(ids, lambda, config_.theta, keep_always);

    for (int i = 0;; ++i) {
      if (step.v <= config_.eps_tol) {
        emit(i, StepKind::Converged, agg, step, z_model, nullptr, x_k, f_xk, grad_xk, radius);
        ++k_;
        finish(StopReason::Converged);
        return true;
      }
      if (i >= config_.inner_limit()) {
        ++k_;
        finish(StopReason::InnerLimit,
               "inner loop exceeded " + std::to_string(config_.inner_limit()) +
                   " passes at outer iteration " + std::to_string(k_ - 1));
        return true;
      }

      const Vector trial = x_k + step.direction;
      const double f_trial = eval_.value(trial);

      if (sufficient_decrease(f_trial, f_xk, step.z, config_.beta)) {
        const FdpResult moved =
            fdp_perturb(eval_, x_k, f_xk, step.direction, f_trial, config_.beta, step.z,
                        config_.sigma, FdpMode::Fdp1, config_.differentiability_checks, rng_);
        result_.fdp_warnings += moved.capped ? 1 : 0;
        x_ = moved.point;
        f_ = moved.f_point;
        emit(i, StepKind::SeriousStep, agg, step, z_model, nullptr, x_k, f_xk, grad_xk, radius);
        ++k_;
        if (target_reached()) {
          finish(StopReason::TargetReached);
          return true;
        }
        return false;
      }

      const FdpResult aux =
          fdp_perturb(eval_, x_k, f_xk, step.direction, f_trial, config_.beta, step.z,
                      config_.sigma, FdpMode::Fdp2, config_.differentiability_checks, rng_);
      result_.fdp_warnings += aux.capped ? 1 : 0;
      BundleAtom fresh{aux.point, eval_.gradient(aux.point), 0.0};
      fresh.err = linearization_error(f_xk, x_k, aux.f_point, aux.point, fresh.grad, strict_);

      if (!improvement_criterion(fresh.err, agg, std::abs(f_trial - f_xk), config_.gamma)) {
        radius_ = config_.mu * radius;
        emit(i, StepKind::NullStep, agg, step, z_model, &fresh, x_k, f_xk, grad_xk, radius);
        ++k_;
        return false;
      }

      // Enrich: keep the selected atoms, append the new one, and solve
      // against them plus the aggregate of the previous subproblem.
      emit(i, StepKind::InnerEnrich, agg, step, z_model, &fresh, x_k, f_xk, grad_xk, radius);
      compact(pool, ids, selected);
      pool.push_back(std::move(fresh));
      ids.push_back(static_cast<std::size_t>(config_.m) + static_cast<std::size_t>(i) + 1);

      fill_instance(instance, pool, &agg);
      qp_options.warm_start = Eigen::VectorXd::Zero(instance.size());
      (*qp_options.warm_start)(instance.size() - 1) = 1.0;
      const qp::SimplexQpSolution sol = qp::solve_simplex_qp(instance, qp_options);

      const auto n_pool = static_cast<Eigen::Index>(pool.size());
      lambda.assign(sol.lambda.data(), sol.lambda.data() + n_pool);
      const double prior_weight = sol.lambda(n_pool);
      agg = aggregate(lambda, pool, prior_weight, &agg);
      step = direction_from_dual(agg, radius, config_.alpha);
      z_model = model_value(instance, step.direction);
      assert(std::abs(z_model - step.z) <= 1e-8 * (1.0 + std::abs(step.z)));
      selected = select_indices(ids, lambda, config_.theta, keep_always);
    }
  }

  static void compact(std::vector<BundleAtom>& pool, std::vector<std::size_t>& ids,
                      const std::vector<std::size_t>& selected) {
    std::size_t out = 0;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (!std::binary_search(selected.begin(), selected.end(), ids[j])) continue;
      if (out != j) {
        pool[out] = std::move(pool[j]);
        ids[out] = ids[j];
      }
      ++out;
    }
    pool.resize(out);
    ids.resize(out);
  }

  static void fill_instance(qp::SimplexQpInstance& instance, const std::vector<BundleAtom>& pool,
                            const AggregateAtom* agg) {
    const auto count = static_cast<Eigen::Index>(pool.size()) + (agg != nullptr ? 1 : 0);
    const Eigen::Index n = pool.front().grad.size();
    instance.atoms.resize(n, count);
    instance.errors.resize(count);
    for (std::size_t j = 0; j < pool.size(); ++j) {
      instance.atoms.col(static_cast<Eigen::Index>(j)) = pool[j].grad;
      instance.errors(static_cast<Eigen::Index>(j)) = pool[j].err;
    }
    if (agg != nullptr) {
      instance.atoms.col(count - 1) = agg->g_tilde;
      instance.errors(count - 1) = agg->e_tilde;
    }
  }

  const SolverConfig& config_;
  const RunHooks& hooks_;
  Evaluator eval_;
  Rng rng_;
  bool strict_;
  RunResult result_;
  Vector x_;
  double f_ = 0.0;
  double radius_ = 1.0;
  int k_ = 0;
};

}  // namespace

RunResult run(const ObjectiveOracle& oracle, const SolverConfig& config, const Vector& x0,
              const RunHooks& hooks) {
  config.validate();
  if (x0.size() != oracle.dimension())
    throw std::invalid_argument("starting point has the wrong dimension");
  if (!x0.allFinite()) throw std::invalid_argument("starting point must be finite");
  Run state(oracle, config, hooks);
  return state.execute(x0);
}

}  // namespace bundlegs::bgs

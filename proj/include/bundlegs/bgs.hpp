#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bundlegs/evaluator.hpp"
#include "bundlegs/problems.hpp"
#include "bundlegs/qp.hpp"
#include "bundlegs/sampling.hpp"

// Bundle method whose local polyhedral model is rebuilt at every outer
// iteration from gradients sampled in a ball around the iterate. An inner
// improvement loop either enriches the model with a new linearization
// (aggregating the old constraints into one and keeping the heaviest
// atoms) or shrinks the sampling radius.
namespace bundlegs::bgs {

using problems::GradientMode;
using problems::ObjectiveOracle;

struct SolverConfig {
  double eps0 = 1.0;      // initial sampling radius
  double mu = 0.5;        // radius reduction factor on null steps
  int m = 1;              // sample size
  double beta = 1e-6;     // sufficient decrease
  double sigma = 1e-8;    // maximum perturbation in FDP1/FDP2
  double alpha = 0.5;     // penalty exponent, the QP penalty is 1/eps^alpha
  double gamma = 0.9;     // linearization error scale in the improvement test
  double theta = 0.9;     // maximum cumulative weight kept by index selection
  double eps_tol = 1e-12; // stop when v <= eps_tol
  std::uint64_t seed = 0;
  int max_outer = 1000;
  double min_radius = 1e-12;
  bool differentiability_checks = false;
  /// Inner passes allowed per outer iteration; 0 means 500 * (m + 1).
  int max_inner = 0;
  double qp_tol = 1e-10;
  GradientMode gradient;

  /// Table defaults with m = 2n.
  static SolverConfig defaults(int n);

  int inner_limit() const { return max_inner > 0 ? max_inner : 500 * (m + 1); }

  /// Throws std::invalid_argument naming the first parameter out of range.
  void validate() const;
};

struct BundleAtom {
  Vector source;
  Vector grad;
  double err = 0.0;
};

struct AggregateAtom {
  Vector g_tilde;
  double e_tilde = 0.0;
};

enum class StepKind { SeriousStep, NullStep, InnerEnrich, Converged };

std::string to_string(StepKind kind);

struct StepOutcome {
  StepKind kind = StepKind::InnerEnrich;
  Vector direction;
  double z = 0.0;
  double v = 0.0;
  double w = 0.0;
};

/// One record per pass of the inner loop. `v`, `w` and `radius` are the
/// values the pass was tested with; `f_val` is f at the iterate after the
/// pass.
struct IterationTrace {
  int k = 0;
  int i = 0;
  double f_val = 0.0;
  double v = 0.0;
  double w = 0.0;
  double radius = 0.0;
  StepKind kind = StepKind::InnerEnrich;
  long grad_evals_cum = 0;
};

/// Everything a pass looked at, for auditing. References are only valid
/// during the callback.
struct StepEvent {
  const IterationTrace& record;
  const Vector& x_k;
  double f_xk;
  const Vector& grad_xk;
  const AggregateAtom& aggregate;
  const StepOutcome& step;
  double radius_pow;  // eps_k^alpha
  /// max over the QP constraints of <g, d> - e at the step's direction.
  double z_model;
  /// Atom built at x_k + d in this pass (null and enrich passes only).
  const BundleAtom* new_atom;
};

enum class StopReason {
  Converged,      // v <= eps_tol
  TargetReached,  // caller's stop predicate fired
  OuterBudget,
  RadiusFloor,
  InnerLimit,     // abort
  OracleFailure,  // abort
};

std::string to_string(StopReason reason);

struct RunHooks {
  std::function<void(const StepEvent&)> on_step;
  /// Checked on the starting point, after every serious step and at the
  /// top of every outer iteration.
  std::function<bool(double f)> stop_at;
};

struct RunResult {
  Vector x;
  double f = 0.0;
  std::vector<IterationTrace> trace;
  StopReason reason = StopReason::OuterBudget;
  int outer_iterations = 0;
  long grad_evals = 0;
  long value_evals = 0;
  int fdp_warnings = 0;
  std::string message;

  bool aborted() const {
    return reason == StopReason::InnerLimit || reason == StopReason::OracleFailure;
  }
};

/// e = f(x_k) - [f(s) + <grad_s, x_k - s>].
///
/// Values slightly below zero (relative to the magnitudes involved) are
/// rounding and clamped to 0. In strict mode a clearly negative value
/// throws std::domain_error, since it means the oracle is not convex or
/// the gradient is wrong; otherwise it is clamped as well.
double linearization_error(double f_xk, const Vector& x_k, double f_s, const Vector& s,
                           const Vector& grad_s, bool strict = true);

double linearization_error(const ObjectiveOracle& oracle, const GradientMode& mode,
                           const Vector& x_k, double f_xk, const Vector& s);

/// Atom 0 is (x_k, grad f(x_k), 0); atoms 1..m are sampled from
/// B(x_k, radius). Uses exactly m + 1 gradient evaluations unless a
/// sample fails to evaluate, in which case it is redrawn once before the
/// error propagates.
std::vector<BundleAtom> build_initial_model(Evaluator& eval, const Vector& x_k, double f_xk,
                                            double radius, int m, Rng& rng,
                                            bool strict = true, bool require_smooth = false);

StepOutcome direction_from_dual(const AggregateAtom& aggregate, double radius, double alpha);
StepOutcome direction_from_dual(const qp::SimplexQpSolution& solution, double radius,
                                double alpha);

/// f(x_k + d) - f(x_k) <= beta * z.
bool sufficient_decrease(double f_trial, double f_xk, double z, double beta);
bool sufficient_decrease(const ObjectiveOracle& oracle, const Vector& x_k, double f_xk,
                         const Vector& d, double z, double beta);

enum class FdpMode { Fdp1, Fdp2 };

struct FdpResult {
  Vector point;  // x_hat + d
  double f_point = 0.0;
  int trials = 0;
  bool capped = false;
};

/// Differentiable perturbation of x + d. With checks disabled this is
/// x + d itself. Otherwise x_hat is redrawn from B(x, sigma_hat), halving
/// sigma_hat each time, until x_hat + d is a smooth point that keeps the
/// mode's decrease relation (FDP1: f(x_hat + d) - f(x) <= beta z, FDP2:
/// the strict opposite). Gives up after 64 draws and flags `capped`.
///
/// `f_x_plus_d` is f(x + d), already known to the caller.
FdpResult fdp_perturb(Evaluator& eval, const Vector& x, double f_x, const Vector& d,
                      double f_x_plus_d, double beta, double z, double sigma, FdpMode mode,
                      bool checks, Rng& rng);

/// e_new <= gamma * e_tilde  or  f_gap <= 1/2 ||g_tilde||^2 + e_tilde.
/// True means enrich the model, false means take a null step.
bool improvement_criterion(double e_new, const AggregateAtom& aggregate, double f_gap,
                           double gamma);

/// Keeps the ids of the l heaviest multipliers, l maximal with
/// (sum of the l largest) / (sum of all) <= theta, then adds `forced`.
/// Returns sorted, deduplicated ids. Equal weights are ranked by position.
std::vector<std::size_t> select_indices(std::span<const std::size_t> ids,
                                        std::span<const double> lambda, double theta,
                                        std::span<const std::size_t> forced = {});

/// g = sum_j lambda_j grad_j + prior_weight * prior.g_tilde, and the same
/// combination of the errors.
AggregateAtom aggregate(std::span<const double> lambda, std::span<const BundleAtom> atoms,
                        double prior_weight = 0.0, const AggregateAtom* prior = nullptr);

/// Runs the method from x0 until v <= eps_tol, the caller's stop predicate
/// fires, max_outer outer iterations have run, or the sampling radius
/// drops below min_radius. Evaluation failures and inner-loop overruns end
/// the run with an abort reason and a message instead of throwing.
///
/// Throws std::invalid_argument for an invalid config or starting point.
RunResult run(const ObjectiveOracle& oracle, const SolverConfig& config, const Vector& x0,
              const RunHooks& hooks = {});

}  // namespace bundlegs::bgs

#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bundlegs {

using Vector = Eigen::VectorXd;

namespace problems {

/// Raised when f or its gradient produces a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GradientKind { Exact, ForwardDifference };

/// How gradients are supplied to a solver. `h` is only read for
/// ForwardDifference.
struct GradientMode {
  GradientKind kind = GradientKind::Exact;
  double h = 1e-9;

  static GradientMode exact() { return {}; }
  static GradientMode forward_difference(double step);

  void validate() const;
};

/// A convex benchmark objective with an analytic gradient, the known
/// optimal value and a reference starting point.
///
/// Instances are immutable once built and can be evaluated from several
/// threads at the same time.
class ObjectiveOracle {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using SmoothFn = std::function<bool(const Vector&)>;

  ObjectiveOracle(std::string name, int dimension, double f_star, Vector x0,
                  ValueFn value, GradientFn gradient,
                  SmoothFn smooth = nullptr,
                  std::optional<Vector> minimizer = std::nullopt);

  const std::string& name() const { return name_; }
  int dimension() const { return dimension_; }
  double f_star() const { return f_star_; }
  const Vector& x0() const { return x0_; }
  const std::optional<Vector>& minimizer() const { return minimizer_; }

  /// f(x). Throws EvaluationError on a non-finite result.
  double value(const Vector& x) const;

  /// Analytic gradient; at kinks some element of the subdifferential.
  Vector exact_gradient(const Vector& x) const;

  /// False when x lies (numerically) on a kink of f. Objectives that
  /// do not provide a predicate report every point as smooth.
  bool is_smooth(const Vector& x) const;

 private:
  std::string name_;
  int dimension_;
  double f_star_;
  Vector x0_;
  ValueFn value_;
  GradientFn gradient_;
  SmoothFn smooth_;
  std::optional<Vector> minimizer_;
};

/// Exact: analytic gradient. ForwardDifference: [f(x + h e_i) - f(x)] / h.
Vector gradient(const ObjectiveOracle& oracle, const GradientMode& mode,
                const Vector& x);

struct CatalogEntry {
  int number;              // 1..13
  std::string name;
  int fixed_dimension;     // 0 for scalable problems
  std::string f_star;      // closed form, e.g. "-(n-1)*sqrt(2)"
};

const std::vector<CatalogEntry>& catalog();

/// Looks up a problem by name (case-insensitive) or by its number
/// ("1".."13") and instantiates it in dimension n.
///
/// Throws std::invalid_argument for unknown names, n < 2 on scalable
/// problems, or n different from the fixed size of problems 9-13.
ObjectiveOracle make_problem(std::string_view name, int n);

/// Convenience: an oracle for f(x) = |x| in one dimension (used by tests
/// and examples of the step primitives).
ObjectiveOracle make_abs_1d();

/// f(x) = ||x||^2, the smooth strongly convex reference objective.
ObjectiveOracle make_sum_of_squares(int n);

}  // namespace problems
}  // namespace bundlegs

#pragma once

#include <iosfwd>
#include <optional>

#include <Eigen/Dense>

namespace bundlegs::qp {

/// min over the unit simplex of  1/2 ||sum_j lambda_j g_j||^2 + scale * sum_j lambda_j e_j.
///
/// Atoms are stored as the columns of `atoms`; `errors` is aligned with
/// them. Errors in [-1e-12, 0) are treated as rounding noise and clamped
/// to zero; anything more negative is rejected.
struct SimplexQpInstance {
  Eigen::MatrixXd atoms;
  Eigen::VectorXd errors;
  double penalty_scale = 1.0;

  Eigen::Index size() const { return atoms.cols(); }
  Eigen::Index dimension() const { return atoms.rows(); }
};

struct SimplexQpSolution {
  Eigen::VectorXd lambda;
  Eigen::VectorXd g_tilde;
  double e_tilde = 0.0;
  double w = 0.0;
  /// Largest violation of the simplex KKT conditions, relative to
  /// 1 + max_j |<g_j, g_tilde> + scale e_j|.
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct QpOptions {
  double tol = 1e-10;
  /// Starting multipliers; projected onto the simplex before use.
  std::optional<Eigen::VectorXd> warm_start;
  /// When set, every instance is written here in the plain-text form of
  /// write_instance before solving.
  std::ostream* dump = nullptr;
};

/// Active-set solver with a projected-gradient fallback. Ties in pivoting
/// go to the lowest index.
///
/// Throws std::invalid_argument on empty or inconsistent input, non-finite
/// data, errors below -1e-12 or a non-positive penalty scale. Hitting the
/// iteration cap is not an error: the best iterate is returned with
/// `converged == false`.
SimplexQpSolution solve_simplex_qp(const SimplexQpInstance& instance,
                                   const QpOptions& options = {});

double objective(const SimplexQpInstance& instance, const Eigen::VectorXd& lambda);

/// KKT violation of `lambda` for `instance` (same scaling as
/// SimplexQpSolution::kkt_residual).
double kkt_residual(const SimplexQpInstance& instance, const Eigen::VectorXd& lambda);

/// Plain-text form:
///
///     simplex-qp <dimension> <atoms>
///     scale <penalty_scale>
///     atom <error> <g_1> ... <g_n>      (one line per atom)
///
/// Numbers are written with 17 significant digits so a read-back
/// reproduces the instance exactly.
void write_instance(std::ostream& out, const SimplexQpInstance& instance);
SimplexQpInstance read_instance(std::istream& in);

}  // namespace bundlegs::qp

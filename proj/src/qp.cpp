#include "bundlegs/qp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bundlegs::qp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kErrorNoise = 1e-12;

VectorXd checked_errors(const SimplexQpInstance& instance) {
  if (instance.size() == 0) throw std::invalid_argument("simplex QP needs at least one atom");
  if (instance.errors.size() != instance.size())
    throw std::invalid_argument("simplex QP: errors and atoms differ in length");
  if (!(instance.penalty_scale > 0.0) || !std::isfinite(instance.penalty_scale))
    throw std::invalid_argument("simplex QP: penalty scale must be positive and finite");
  if (!instance.atoms.allFinite() || !instance.errors.allFinite())
    throw std::invalid_argument("simplex QP: non-finite input");
  VectorXd e = instance.errors;
  for (Index j = 0; j < e.size(); ++j) {
    if (e(j) < -kErrorNoise)
      throw std::invalid_argument("simplex QP: negative linearization error " +
                                  std::to_string(e(j)));
    e(j) = std::max(e(j), 0.0);
  }
  return e;
}

// Euclidean projection onto {x >= 0, sum x = 1}.
VectorXd project_to_simplex(const VectorXd& v) {
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) shift = t;
  }
  return (v.array() - shift).max(0.0).matrix();
}

struct Kkt {
  double residual = 0.0;  // scaled
  double denominator = 1.0;
  double stationarity = 0.0;  // unscaled, over the support
  Index entering = -1;        // most violated index off the support
};

Kkt measure(const VectorXd& q, const VectorXd& lambda) {
  Kkt k;
  const double mu = lambda.dot(q);
  k.denominator = 1.0 + q.cwiseAbs().maxCoeff();
  double dual = 0.0;
  double worst = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < q.size(); ++j) {
    if (lambda(j) > 0.0) {
      k.stationarity = std::max(k.stationarity, std::abs(q(j) - mu));
    } else if (q(j) < mu) {
      dual = std::max(dual, mu - q(j));
      if (q(j) < worst) {
        worst = q(j);
        k.entering = j;
      }
    }
  }
  k.residual = std::max(k.stationarity, dual) / k.denominator;
  return k;
}

class ActiveSetSolver {
 public:
  ActiveSetSolver(const MatrixXd& gram, const VectorXd& linear, double tol)
      : gram_(gram), linear_(linear), tol_(tol) {}

  // Returns true on convergence; `lambda` is updated in place.
  bool solve(VectorXd& lambda, int& iterations) {
    std::vector<Index> support;
    for (Index j = 0; j < lambda.size(); ++j)
      if (lambda(j) > 0.0) support.push_back(j);

    const Index n = lambda.size();
    const int cap = static_cast<int>(std::max<Index>(10 * n * n, 50));
    for (iterations = 0; iterations < cap; ++iterations) {
      const VectorXd q = gram_ * lambda + linear_;
      const Kkt kkt = measure(q, lambda);
      if (kkt.stationarity <= tol_ * kkt.denominator) {
        if (kkt.residual <= tol_ || kkt.entering < 0) return kkt.residual <= tol_;
        support.insert(std::lower_bound(support.begin(), support.end(), kkt.entering),
                       kkt.entering);
      }
      if (support.size() < 2) return false;
      if (!step(support, q, lambda)) return false;
    }
    return false;
  }

 private:
  // One equality-constrained step on the support, with a ratio test
  // against the nonnegativity bounds. Returns false if no progress is
  // possible.
  bool step(std::vector<Index>& support, const VectorXd& q, VectorXd& lambda) {
    const Index s = static_cast<Index>(support.size());
    const Index ref = support.back();
    MatrixXd reduced(s - 1, s - 1);
    VectorXd reduced_grad(s - 1);
    for (Index a = 0; a < s - 1; ++a) {
      const Index ia = support[a];
      reduced_grad(a) = q(ia) - q(ref);
      for (Index b = 0; b < s - 1; ++b) {
        const Index ib = support[b];
        reduced(a, b) = gram_(ia, ib) - gram_(ia, ref) - gram_(ref, ib) + gram_(ref, ref);
      }
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(reduced);
    const VectorXd& values = eig.eigenvalues();
    const MatrixXd& vectors = eig.eigenvectors();
    const double threshold = 1e-13 * std::max(1.0, values.cwiseAbs().maxCoeff());
    VectorXd newton = VectorXd::Zero(s - 1);
    VectorXd null_part = VectorXd::Zero(s - 1);
    for (Index k = 0; k < s - 1; ++k) {
      const double proj = vectors.col(k).dot(reduced_grad);
      if (values(k) > threshold) {
        newton -= (proj / values(k)) * vectors.col(k);
      } else {
        null_part += proj * vectors.col(k);
      }
    }

    // A gradient component in the flat directions means the objective
    // decreases linearly along it; follow it until a bound is hit.
    const bool flat = null_part.norm() > 1e-12 * (1.0 + reduced_grad.norm());
    const VectorXd dir = flat ? VectorXd(-null_part) : newton;
    VectorXd p(s);
    p.head(s - 1) = dir;
    p(s - 1) = -dir.sum();
    if (p.cwiseAbs().maxCoeff() == 0.0) return false;

    double alpha = flat ? std::numeric_limits<double>::infinity() : 1.0;
    Index block = -1;
    for (Index a = 0; a < s; ++a) {
      if (p(a) >= 0.0) continue;
      const double t = lambda(support[a]) / -p(a);
      if (t < alpha || (t == alpha && block >= 0 && support[a] < support[block])) {
        alpha = t;
        block = a;
      }
    }
    if (block < 0 && flat) return false;

    for (Index a = 0; a < s; ++a) lambda(support[a]) += alpha * p(a);
    if (block >= 0) lambda(support[block]) = 0.0;

    std::vector<Index> kept;
    kept.reserve(support.size());
    for (Index j : support) {
      if (lambda(j) > 0.0) {
        kept.push_back(j);
      } else {
        lambda(j) = 0.0;
      }
    }
    support.swap(kept);
    lambda /= lambda.sum();
    return true;
  }

  const MatrixXd& gram_;
  const VectorXd& linear_;
  double tol_;
};

// Fallback for instances the active-set method could not settle.
void projected_gradient(const MatrixXd& gram, const VectorXd& linear, VectorXd& lambda,
                        double tol, int max_iterations) {
  const double lipschitz = std::max(gram.diagonal().sum(), 1e-300);
  for (int it = 0; it < max_iterations; ++it) {
    const VectorXd q = gram * lambda + linear;
    if (measure(q, lambda).residual <= tol) return;
    lambda = project_to_simplex(lambda - q / lipschitz);
  }
}

double objective_of(const MatrixXd& gram, const VectorXd& linear, const VectorXd& lambda) {
  return 0.5 * lambda.dot(gram * lambda) + linear.dot(lambda);
}

}  // namespace

SimplexQpSolution solve_simplex_qp(const SimplexQpInstance& instance, const QpOptions& options) {
  if (options.dump != nullptr) write_instance(*options.dump, instance);
  const VectorXd errors = checked_errors(instance);
  if (!(options.tol > 0.0)) throw std::invalid_argument("simplex QP: tolerance must be positive");

  const Index n = instance.size();
  const MatrixXd gram = instance.atoms.transpose() * instance.atoms;
  const VectorXd linear = instance.penalty_scale * errors;

  VectorXd lambda = VectorXd::Zero(n);
  if (options.warm_start && options.warm_start->size() == n &&
      options.warm_start->allFinite()) {
    lambda = project_to_simplex(*options.warm_start);
  } else {
    Index best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      const double v = 0.5 * gram(j, j) + linear(j);
      if (v < best_value) {
        best_value = v;
        best = j;
      }
    }
    lambda(best) = 1.0;
  }

  SimplexQpSolution sol;
  ActiveSetSolver solver(gram, linear, options.tol);
  sol.converged = solver.solve(lambda, sol.iterations);
  if (!sol.converged) {
    VectorXd fallback = lambda;
    projected_gradient(gram, linear, fallback, options.tol, 200 * static_cast<int>(n) + 1000);
    const double r_active = measure(gram * lambda + linear, lambda).residual;
    const double r_fallback = measure(gram * fallback + linear, fallback).residual;
    if (r_fallback < r_active &&
        objective_of(gram, linear, fallback) <= objective_of(gram, linear, lambda) + 1e-15)
      lambda = fallback;
  }

  sol.lambda = lambda;
  sol.g_tilde = instance.atoms * lambda;
  sol.e_tilde = errors.dot(lambda);
  sol.w = 0.5 * sol.g_tilde.squaredNorm() + instance.penalty_scale * sol.e_tilde;
  sol.kkt_residual = measure(gram * lambda + linear, lambda).residual;
  sol.converged = sol.kkt_residual <= options.tol;
  return sol;
}

double objective(const SimplexQpInstance& instance, const VectorXd& lambda) {
  const VectorXd errors = checked_errors(instance);
  const VectorXd g = instance.atoms * lambda;
  return 0.5 * g.squaredNorm() + instance.penalty_scale * errors.dot(lambda);
}

double kkt_residual(const SimplexQpInstance& instance, const VectorXd& lambda) {
  const VectorXd errors = checked_errors(instance);
  const VectorXd q =
      instance.atoms.transpose() * (instance.atoms * lambda) + instance.penalty_scale * errors;
  return measure(q, lambda).residual;
}

void write_instance(std::ostream& out, const SimplexQpInstance& instance) {
  const auto old_precision = out.precision(17);
  out << "simplex-qp " << instance.dimension() << ' ' << instance.size() << '\n';
  out << "scale " << instance.penalty_scale << '\n';
  for (Index j = 0; j < instance.size(); ++j) {
    out << "atom " << (j < instance.errors.size() ? instance.errors(j) : 0.0);
    for (Index i = 0; i < instance.dimension(); ++i) out << ' ' << instance.atoms(i, j);
    out << '\n';
  }
  out.precision(old_precision);
}

SimplexQpInstance read_instance(std::istream& in) {
  std::string tag;
  Index dim = 0;
  Index count = 0;
  if (!(in >> tag >> dim >> count) || tag != "simplex-qp" || dim < 0 || count < 0)
    throw std::runtime_error("simplex QP dump: bad header");
  SimplexQpInstance instance;
  if (!(in >> tag >> instance.penalty_scale) || tag != "scale")
    throw std::runtime_error("simplex QP dump: missing scale line");
  instance.atoms.resize(dim, count);
  instance.errors.resize(count);
  for (Index j = 0; j < count; ++j) {
    if (!(in >> tag >> instance.errors(j)) || tag != "atom")
      throw std::runtime_error("simplex QP dump: bad atom line " + std::to_string(j));
    for (Index i = 0; i < dim; ++i) {
      if (!(in >> instance.atoms(i, j)))
        throw std::runtime_error("simplex QP dump: short atom line " + std::to_string(j));
    }
  }
  return instance;
}

}  // namespace bundlegs::qp

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include <doctest.h>

#include "bundlegs/qp.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace qp = bundlegs::qp;

namespace {

// Exhaustive search over the simplex grid with the given step. Only used
// for up to four atoms.
double grid_minimum(const qp::SimplexQpInstance& inst, double step) {
  const int count = static_cast<int>(inst.size());
  const int ticks = static_cast<int>(std::lround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  VectorXd lambda(count);
  auto eval = [&] { best = std::min(best, qp::objective(inst, lambda)); };
  if (count == 1) {
    lambda(0) = 1.0;
    eval();
    return best;
  }
  std::vector<int> a(static_cast<std::size_t>(count - 1), 0);
  // Enumerate compositions of `ticks` into `count` parts.
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == count - 1) {
      for (int j = 0; j < count - 1; ++j) lambda(j) = a[static_cast<std::size_t>(j)] * step;
      lambda(count - 1) = left * step;
      eval();
      return;
    }
    for (int t = 0; t <= left; ++t) {
      a[static_cast<std::size_t>(pos)] = t;
      rec(pos + 1, left - t);
    }
  };
  rec(0, ticks);
  return best;
}

qp::SimplexQpInstance random_instance(std::mt19937_64& rng, int max_atoms, int max_dim) {
  std::uniform_int_distribution<int> atoms(1, max_atoms);
  std::uniform_int_distribution<int> dims(1, max_dim);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  const double scales[] = {0.1, 1.0, 10.0};
  qp::SimplexQpInstance inst;
  const int count = atoms(rng);
  const int dim = dims(rng);
  inst.atoms.resize(dim, count);
  for (int j = 0; j < count; ++j)
    for (int i = 0; i < dim; ++i) inst.atoms(i, j) = gauss(rng);
  inst.errors.resize(count);
  for (int j = 0; j < count; ++j) inst.errors(j) = unit(rng);
  inst.penalty_scale = scales[std::uniform_int_distribution<int>(0, 2)(rng)];
  return inst;
}

void check_on_simplex(const VectorXd& lambda) {
  CHECK(lambda.minCoeff() >= 0.0);
  CHECK(std::abs(lambda.sum() - 1.0) <= 1e-10);
}

}  // namespace

TEST_CASE("single atom") {
  qp::SimplexQpInstance inst{MatrixXd::Constant(3, 1, 2.0), VectorXd::Zero(1), 5.0};
  const auto sol = qp::solve_simplex_qp(inst);
  CHECK(sol.lambda(0) == 1.0);
  CHECK(sol.g_tilde.isApprox(inst.atoms.col(0)));
  CHECK(sol.w == doctest::Approx(6.0));
}

TEST_CASE("opposite atoms in one dimension cancel") {
  qp::SimplexQpInstance inst{MatrixXd{{1.0, -1.0}}, VectorXd::Zero(2), 1.0};
  const auto sol = qp::solve_simplex_qp(inst);
  CHECK(sol.lambda(0) == doctest::Approx(0.5));
  CHECK(sol.lambda(1) == doctest::Approx(0.5));
  CHECK(std::abs(sol.g_tilde(0)) <= 1e-12);
  CHECK(std::abs(sol.w) <= 1e-12);
}

TEST_CASE("two orthogonal atoms (3,0) and (0,1)") {
  qp::SimplexQpInstance inst{MatrixXd{{3.0, 0.0}, {0.0, 1.0}}, VectorXd::Zero(2), 1.0};
  const auto sol = qp::solve_simplex_qp(inst);
  CHECK(sol.lambda(0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(sol.lambda(1) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(sol.g_tilde(0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(sol.g_tilde(1) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(sol.w == doctest::Approx(0.45).epsilon(1e-12));

  // Independent check: scan lambda_1 on a 1e-4 grid.
  double best = 1e300;
  double arg = -1.0;
  for (int t = 0; t <= 10000; ++t) {
    const double l = t * 1e-4;
    const double v = 0.5 * (9 * l * l + (1 - l) * (1 - l));
    if (v < best) {
      best = v;
      arg = l;
    }
  }
  CHECK(std::abs(arg - sol.lambda(0)) <= 1e-4);
  CHECK(std::abs(best - sol.w) <= 1e-8);
}

TEST_CASE("random small instances match the grid oracle") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 60; ++t) {
    const auto inst = random_instance(rng, 4, 5);
    const auto sol = qp::solve_simplex_qp(inst);
    CAPTURE(t);
    check_on_simplex(sol.lambda);
    CHECK(sol.converged);
    CHECK(sol.kkt_residual <= 1e-10);
    CHECK(sol.w <= grid_minimum(inst, 1e-2) + 1e-12);
    CHECK(std::abs(sol.w - (0.5 * sol.g_tilde.squaredNorm() + inst.penalty_scale * sol.e_tilde)) <=
          1e-10);
  }
}

TEST_CASE("optimality certificate under feasible perturbations") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int t = 0; t < 40; ++t) {
    qp::SimplexQpInstance inst = random_instance(rng, 12, 8);
    const auto sol = qp::solve_simplex_qp(inst);
    const double base = qp::objective(inst, sol.lambda);
    for (int p = 0; p < 50; ++p) {
      // Move toward a random simplex point by 1e-4 in norm.
      VectorXd target = VectorXd::Zero(inst.size());
      for (Eigen::Index j = 0; j < inst.size(); ++j) target(j) = std::abs(gauss(rng));
      target /= target.sum();
      VectorXd dir = target - sol.lambda;
      if (dir.norm() == 0.0) continue;
      const double len = std::min(1e-4 / dir.norm(), 1.0);
      CHECK(qp::objective(inst, sol.lambda + len * dir) >= base - 1e-8);
    }
  }
}

TEST_CASE("scaling errors by c and the penalty by 1/c keeps lambda") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    qp::SimplexQpInstance inst = random_instance(rng, 8, 6);
    const auto a = qp::solve_simplex_qp(inst);
    qp::SimplexQpInstance scaled = inst;
    scaled.errors *= 7.0;
    scaled.penalty_scale /= 7.0;
    const auto b = qp::solve_simplex_qp(scaled);
    CHECK(std::abs(a.w - b.w) <= 1e-10 * (1.0 + a.w));
    CHECK((a.lambda - b.lambda).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("duplicating an atom leaves the optimal value unchanged") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 30; ++t) {
    qp::SimplexQpInstance inst = random_instance(rng, 6, 4);
    const auto a = qp::solve_simplex_qp(inst);
    qp::SimplexQpInstance dup = inst;
    const Eigen::Index count = inst.size();
    dup.atoms.conservativeResize(Eigen::NoChange, count + 1);
    dup.errors.conservativeResize(count + 1);
    dup.atoms.col(count) = inst.atoms.col(t % count);
    dup.errors(count) = inst.errors(t % count);
    const auto b = qp::solve_simplex_qp(dup);
    CHECK(std::abs(a.w - b.w) <= 1e-10 * (1.0 + a.w));
  }
}

TEST_CASE("warm start reaches the cold-start solution") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 30; ++t) {
    qp::SimplexQpInstance inst = random_instance(rng, 10, 6);
    const auto cold = qp::solve_simplex_qp(inst);
    qp::QpOptions opts;
    opts.warm_start = VectorXd::Ones(inst.size()) / static_cast<double>(inst.size());
    const auto warm = qp::solve_simplex_qp(inst, opts);
    CHECK(std::abs(cold.w - warm.w) <= 1e-8);
    CHECK((cold.g_tilde - warm.g_tilde).norm() <= 1e-6);
  }
}

TEST_CASE("degenerate and larger instances stay on the simplex") {
  SUBCASE("many identical atoms") {
    qp::SimplexQpInstance inst{MatrixXd::Ones(3, 30), VectorXd::Zero(30), 1.0};
    const auto sol = qp::solve_simplex_qp(inst);
    check_on_simplex(sol.lambda);
    CHECK(sol.w == doctest::Approx(1.5));
  }
  SUBCASE("more atoms than dimensions") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    qp::SimplexQpInstance inst;
    inst.atoms = MatrixXd::NullaryExpr(5, 101, [&] { return gauss(rng); });
    inst.errors = VectorXd::Zero(101);
    const auto sol = qp::solve_simplex_qp(inst);
    check_on_simplex(sol.lambda);
    CHECK(sol.kkt_residual <= 1e-10);
    // 101 Gaussian atoms in R^5 surround the origin with high probability.
    CHECK(sol.g_tilde.norm() <= 1e-6);
  }
}

TEST_CASE("input validation") {
  qp::SimplexQpInstance empty;
  CHECK_THROWS_AS(qp::solve_simplex_qp(empty), std::invalid_argument);

  qp::SimplexQpInstance mismatched{MatrixXd::Ones(2, 3), VectorXd::Zero(2), 1.0};
  CHECK_THROWS_AS(qp::solve_simplex_qp(mismatched), std::invalid_argument);

  qp::SimplexQpInstance negative{MatrixXd::Ones(2, 2), VectorXd{{0.0, -1e-6}}, 1.0};
  CHECK_THROWS_AS(qp::solve_simplex_qp(negative), std::invalid_argument);

  qp::SimplexQpInstance noise{MatrixXd{{1.0, -1.0}}, VectorXd{{0.0, -5e-13}}, 1.0};
  CHECK(qp::solve_simplex_qp(noise).e_tilde == 0.0);

  qp::SimplexQpInstance bad_scale{MatrixXd::Ones(2, 2), VectorXd::Zero(2), 0.0};
  CHECK_THROWS_AS(qp::solve_simplex_qp(bad_scale), std::invalid_argument);

  qp::SimplexQpInstance nan{MatrixXd::Ones(2, 2), VectorXd::Zero(2), 1.0};
  nan.atoms(0, 0) = std::nan("");
  CHECK_THROWS_AS(qp::solve_simplex_qp(nan), std::invalid_argument);
}

TEST_CASE("dump format round-trips exactly") {
  std::mt19937_64 rng(12);
  const auto inst = random_instance(rng, 5, 4);
  std::stringstream buffer;
  qp::QpOptions opts;
  opts.dump = &buffer;
  const auto sol = qp::solve_simplex_qp(inst, opts);
  const auto back = qp::read_instance(buffer);
  CHECK(back.atoms == inst.atoms);
  CHECK(back.errors == inst.errors);
  CHECK(back.penalty_scale == inst.penalty_scale);
  CHECK(qp::solve_simplex_qp(back).w == sol.w);

  std::istringstream junk("not-a-dump 1 2");
  CHECK_THROWS(qp::read_instance(junk));
}

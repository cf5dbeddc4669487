#include "bundlegs/problems.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <utility>

namespace bundlegs::problems {

namespace {

// Relative gap below which two competing pieces of a max-type function
// are considered tied, i.e. the point sits on a kink.
constexpr double kTieTolerance = 1e-12;

bool separated(double top, double second) {
  return top - second > kTieTolerance * std::max(std::abs(top), std::abs(second));
}

struct ArgMax {
  Eigen::Index index = 0;
  double value = -std::numeric_limits<double>::infinity();
  double runner_up = -std::numeric_limits<double>::infinity();
};

// Lowest index wins ties so gradients are deterministic on kinks.
template <class Values>
ArgMax arg_max(const Values& values, Eigen::Index size) {
  ArgMax best;
  for (Eigen::Index i = 0; i < size; ++i) {
    const double v = values(i);
    if (v > best.value) {
      best.runner_up = best.value;
      best.value = v;
      best.index = i;
    } else if (v > best.runner_up) {
      best.runner_up = v;
    }
  }
  return best;
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// x0_i = +scale(i) for the first half, -scale(i) for the rest (1-based i).
Vector split_sign_start(int n, double divisor) {
  Vector x0(n);
  for (int i = 1; i <= n; ++i) {
    const double v = static_cast<double>(i) / divisor;
    x0(i - 1) = i <= n / 2 ? v : -v;
  }
  return x0;
}

// --- Problem 1: tilted norm, f(x) = w||x|| + (w - 1) x_1 with w = 4.
constexpr double kTilt = 4.0;

ObjectiveOracle tilted_norm(int n) {
  auto f = [](const Vector& x) { return kTilt * x.norm() + (kTilt - 1.0) * x(0); };
  auto g = [](const Vector& x) {
    const double r = x.norm();
    Vector grad = Vector::Zero(x.size());
    if (r > 0.0) {
      grad = (kTilt / r) * x;
      grad(0) += kTilt - 1.0;
    }
    return grad;
  };
  auto smooth = [](const Vector& x) { return x.norm() > 0.0; };
  return {"TiltedNorm", n, 0.0, Vector::Ones(n), f, g, smooth, Vector(Vector::Zero(n))};
}

// --- Problem 2: f(x) = max_i |sum_j x_j / (i + j - 1)|.
Vector hilbert_rows(const Vector& x) {
  const Eigen::Index n = x.size();
  Vector s = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) s(i) += x(j) / static_cast<double>(i + j + 1);
  }
  return s;
}

ObjectiveOracle mxhilb(int n) {
  auto f = [](const Vector& x) { return hilbert_rows(x).cwiseAbs().maxCoeff(); };
  auto g = [](const Vector& x) {
    const Vector s = hilbert_rows(x);
    const Vector a = s.cwiseAbs();
    const ArgMax top = arg_max(a, a.size());
    Vector grad(x.size());
    const double sg = sign(s(top.index));
    for (Eigen::Index j = 0; j < x.size(); ++j)
      grad(j) = sg / static_cast<double>(top.index + j + 1);
    return grad;
  };
  auto smooth = [](const Vector& x) {
    const Vector a = hilbert_rows(x).cwiseAbs();
    const ArgMax top = arg_max(a, a.size());
    return top.value > 0.0 && separated(top.value, top.runner_up);
  };
  return {"MXHILB-gen", n, 0.0, Vector::Ones(n), f, g, smooth, Vector(Vector::Zero(n))};
}

// --- Problem 3: Chained LQ.
ObjectiveOracle chained_lq(int n) {
  auto f = [](const Vector& x) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double lin = -x(i) - x(i + 1);
      sum += std::max(lin, lin + (x(i) * x(i) + x(i + 1) * x(i + 1) - 1.0));
    }
    return sum;
  };
  auto g = [](const Vector& x) {
    Vector grad = Vector::Zero(x.size());
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      grad(i) -= 1.0;
      grad(i + 1) -= 1.0;
      if (x(i) * x(i) + x(i + 1) * x(i + 1) - 1.0 > 0.0) {
        grad(i) += 2.0 * x(i);
        grad(i + 1) += 2.0 * x(i + 1);
      }
    }
    return grad;
  };
  auto smooth = [](const Vector& x) {
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const double q = x(i) * x(i) + x(i + 1) * x(i + 1) - 1.0;
      if (std::abs(q) <= kTieTolerance) return false;
    }
    return true;
  };
  const double nm1 = n - 1;
  return {"ChainedLQ", n, -nm1 * std::sqrt(2.0), Vector::Constant(n, -0.5), f, g, smooth,
          Vector(Vector::Constant(n, 1.0 / std::sqrt(2.0)))};
}

// --- Problems 4, 5: the three pieces of Chained CB3 on one pair.
std::array<double, 3> cb3_pieces(double a, double b) {
  return {std::pow(a, 4) + b * b, (2.0 - a) * (2.0 - a) + (2.0 - b) * (2.0 - b),
          2.0 * std::exp(-a + b)};
}

std::array<std::pair<double, double>, 3> cb3_piece_grads(double a, double b) {
  const double e = 2.0 * std::exp(-a + b);
  return {{{4.0 * a * a * a, 2.0 * b}, {-2.0 * (2.0 - a), -2.0 * (2.0 - b)}, {-e, e}}};
}

ObjectiveOracle chained_cb3_1(int n) {
  auto f = [](const Vector& x) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const auto p = cb3_pieces(x(i), x(i + 1));
      sum += std::max({p[0], p[1], p[2]});
    }
    return sum;
  };
  auto g = [](const Vector& x) {
    Vector grad = Vector::Zero(x.size());
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const auto p = cb3_pieces(x(i), x(i + 1));
      const auto top = arg_max([&](Eigen::Index k) { return p[k]; }, 3);
      const auto pg = cb3_piece_grads(x(i), x(i + 1))[top.index];
      grad(i) += pg.first;
      grad(i + 1) += pg.second;
    }
    return grad;
  };
  auto smooth = [](const Vector& x) {
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const auto p = cb3_pieces(x(i), x(i + 1));
      const auto top = arg_max([&](Eigen::Index k) { return p[k]; }, 3);
      if (!separated(top.value, top.runner_up)) return false;
    }
    return true;
  };
  return {"ChainedCB3I", n, 2.0 * (n - 1), Vector::Constant(n, 2.0), f, g, smooth,
          Vector(Vector::Ones(n))};
}

std::array<double, 3> cb3_sums(const Vector& x) {
  std::array<double, 3> s{0.0, 0.0, 0.0};
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const auto p = cb3_pieces(x(i), x(i + 1));
    for (int k = 0; k < 3; ++k) s[k] += p[k];
  }
  return s;
}

ObjectiveOracle chained_cb3_2(int n) {
  auto f = [](const Vector& x) {
    const auto s = cb3_sums(x);
    return std::max({s[0], s[1], s[2]});
  };
  auto g = [](const Vector& x) {
    const auto s = cb3_sums(x);
    const auto top = arg_max([&](Eigen::Index k) { return s[k]; }, 3);
    Vector grad = Vector::Zero(x.size());
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
      const auto pg = cb3_piece_grads(x(i), x(i + 1))[top.index];
      grad(i) += pg.first;
      grad(i + 1) += pg.second;
    }
    return grad;
  };
  auto smooth = [](const Vector& x) {
    const auto s = cb3_sums(x);
    const auto top = arg_max([&](Eigen::Index k) { return s[k]; }, 3);
    return separated(top.value, top.runner_up);
  };
  return {"ChainedCB3II", n, 2.0 * (n - 1), Vector::Constant(n, 2.0), f, g, smooth,
          Vector(Vector::Ones(n))};
}

// --- Problems 6 and 11: f(x) = max_i x_i^2.
ObjectiveOracle maxq(std::string name, int n) {
  auto f = [](const Vector& x) { return x.cwiseAbs2().maxCoeff(); };
  auto g = [](const Vector& x) {
    const Vector sq = x.cwiseAbs2();
    const auto top = arg_max(sq, sq.size());
    Vector grad = Vector::Zero(x.size());
    grad(top.index) = 2.0 * x(top.index);
    return grad;
  };
  auto smooth = [](const Vector& x) {
    const Vector sq = x.cwiseAbs2();
    const auto top = arg_max(sq, sq.size());
    return separated(top.value, top.runner_up);
  };
  return {std::move(name), n, 0.0, split_sign_start(n, 1.0), f, g, smooth,
          Vector(Vector::Zero(n))};
}

// --- Problem 7: f(x) = max_i |x_i|.
ObjectiveOracle maxl(int n) {
  auto f = [](const Vector& x) { return x.cwiseAbs().maxCoeff(); };
  auto g = [](const Vector& x) {
    const Vector a = x.cwiseAbs();
    const auto top = arg_max(a, a.size());
    Vector grad = Vector::Zero(x.size());
    grad(top.index) = sign(x(top.index));
    return grad;
  };
  auto smooth = [](const Vector& x) {
    const Vector a = x.cwiseAbs();
    const auto top = arg_max(a, a.size());
    return top.value > 0.0 && separated(top.value, top.runner_up);
  };
  return {"MAXL-gen", n, 0.0, split_sign_start(n, static_cast<double>(n)), f, g, smooth,
          Vector(Vector::Zero(n))};
}

// --- Problem 8: f(x) = sqrt(x' A x) + x' B x with A = diag(1,...,1,0,...,0)
// (first ceil(n/2) entries) and B = I.
ObjectiveOracle partly_smooth(int n) {
  const Eigen::Index half = (n + 1) / 2;
  auto f = [half](const Vector& x) {
    return x.head(half).norm() + x.squaredNorm();
  };
  auto g = [half](const Vector& x) {
    Vector grad = 2.0 * x;
    const double r = x.head(half).norm();
    if (r > 0.0) grad.head(half) += x.head(half) / r;
    return grad;
  };
  auto smooth = [half](const Vector& x) { return x.head(half).norm() > 0.0; };
  return {"PartlySmooth", n, 0.0, Vector::Ones(n), f, g, smooth, Vector(Vector::Zero(n))};
}

// --- Problem 9: QL.
std::array<double, 3> ql_pieces(const Vector& x) {
  const double base = x(0) * x(0) + x(1) * x(1);
  return {base, base + 10.0 * (-4.0 * x(0) - x(1) + 4.0),
          base + 10.0 * (-x(0) - 2.0 * x(1) + 6.0)};
}

ObjectiveOracle ql() {
  auto f = [](const Vector& x) {
    const auto p = ql_pieces(x);
    return std::max({p[0], p[1], p[2]});
  };
  auto g = [](const Vector& x) {
    const auto p = ql_pieces(x);
    const auto top = arg_max([&](Eigen::Index k) { return p[k]; }, 3);
    Vector grad(2);
    grad << 2.0 * x(0), 2.0 * x(1);
    if (top.index == 1) grad += Vector{{-40.0, -10.0}};
    if (top.index == 2) grad += Vector{{-10.0, -20.0}};
    return grad;
  };
  auto smooth = [](const Vector& x) {
    const auto p = ql_pieces(x);
    const auto top = arg_max([&](Eigen::Index k) { return p[k]; }, 3);
    return separated(top.value, top.runner_up);
  };
  return {"QL", 2, 7.2, Vector{{-1.0, 5.0}}, f, g, smooth, Vector{{1.2, 2.4}}};
}

// --- Problem 10: Mifflin1, f(x) = -x_1 + 20 max(x_1^2 + x_2^2 - 1, 0).
ObjectiveOracle mifflin1() {
  auto f = [](const Vector& x) {
    return -x(0) + 20.0 * std::max(x(0) * x(0) + x(1) * x(1) - 1.0, 0.0);
  };
  auto g = [](const Vector& x) {
    Vector grad{{-1.0, 0.0}};
    if (x(0) * x(0) + x(1) * x(1) - 1.0 > 0.0) {
      grad(0) += 40.0 * x(0);
      grad(1) += 40.0 * x(1);
    }
    return grad;
  };
  auto smooth = [](const Vector& x) {
    return std::abs(x(0) * x(0) + x(1) * x(1) - 1.0) > kTieTolerance;
  };
  return {"Mifflin1", 2, -1.0, Vector{{0.8, 0.6}}, f, g, smooth, Vector{{1.0, 0.0}}};
}

// --- Problem 12: Goffin, f(x) = n max_i x_i - sum_i x_i.
ObjectiveOracle goffin(int n) {
  auto f = [](const Vector& x) {
    return static_cast<double>(x.size()) * x.maxCoeff() - x.sum();
  };
  auto g = [](const Vector& x) {
    const auto top = arg_max(x, x.size());
    Vector grad = Vector::Constant(x.size(), -1.0);
    grad(top.index) += static_cast<double>(x.size());
    return grad;
  };
  auto smooth = [](const Vector& x) {
    const auto top = arg_max(x, x.size());
    return separated(top.value, top.runner_up);
  };
  Vector x0(n);
  for (int i = 1; i <= n; ++i) x0(i - 1) = i - 0.5 * (n + 1);
  return {"Goffin", n, 0.0, x0, f, g, smooth, Vector(Vector::Zero(n))};
}

// --- Problem 13: Rosen-Suzuki as a max of four quadratics.
double rosen_base(const Vector& x) {
  return x(0) * x(0) + x(1) * x(1) + 2.0 * x(2) * x(2) + x(3) * x(3) - 5.0 * x(0) -
         5.0 * x(1) - 21.0 * x(2) + 7.0 * x(3);
}

std::array<double, 4> rosen_pieces(const Vector& x) {
  const double b = rosen_base(x);
  const double c2 = x(0) * x(0) + x(1) * x(1) + x(2) * x(2) + x(3) * x(3) + x(0) - x(1) +
                    x(2) - x(3) - 8.0;
  const double c3 = x(0) * x(0) + 2.0 * x(1) * x(1) + x(2) * x(2) + 2.0 * x(3) * x(3) -
                    x(0) - x(3) - 10.0;
  const double c4 =
      x(0) * x(0) + x(1) * x(1) + x(2) * x(2) + 2.0 * x(0) - x(1) - x(3) - 5.0;
  return {b, b + 10.0 * c2, b + 10.0 * c3, b + 10.0 * c4};
}

ObjectiveOracle rosen() {
  auto f = [](const Vector& x) {
    const auto p = rosen_pieces(x);
    return std::max({p[0], p[1], p[2], p[3]});
  };
  auto g = [](const Vector& x) {
    const auto p = rosen_pieces(x);
    const auto top = arg_max([&](Eigen::Index k) { return p[k]; }, 4);
    Vector grad{{2.0 * x(0) - 5.0, 2.0 * x(1) - 5.0, 4.0 * x(2) - 21.0, 2.0 * x(3) + 7.0}};
    switch (top.index) {
      case 1:
        grad += 10.0 * Vector{{2.0 * x(0) + 1.0, 2.0 * x(1) - 1.0, 2.0 * x(2) + 1.0,
                               2.0 * x(3) - 1.0}};
        break;
      case 2:
        grad += 10.0 * Vector{{2.0 * x(0) - 1.0, 4.0 * x(1), 2.0 * x(2), 4.0 * x(3) - 1.0}};
        break;
      case 3:
        grad += 10.0 * Vector{{2.0 * x(0) + 2.0, 2.0 * x(1) - 1.0, 2.0 * x(2), -1.0}};
        break;
      default:
        break;
    }
    return grad;
  };
  auto smooth = [](const Vector& x) {
    const auto p = rosen_pieces(x);
    const auto top = arg_max([&](Eigen::Index k) { return p[k]; }, 4);
    return separated(top.value, top.runner_up);
  };
  return {"Rosen", 4, -44.0, Vector::Zero(4), f, g, smooth, Vector{{0.0, 1.0, 2.0, -1.0}}};
}

}  // namespace

GradientMode GradientMode::forward_difference(double step) {
  GradientMode mode{GradientKind::ForwardDifference, step};
  mode.validate();
  return mode;
}

void GradientMode::validate() const {
  if (kind == GradientKind::ForwardDifference && !(h > 0.0))
    throw std::invalid_argument("forward-difference step must be positive");
}

ObjectiveOracle::ObjectiveOracle(std::string name, int dimension, double f_star, Vector x0,
                                 ValueFn value, GradientFn gradient, SmoothFn smooth,
                                 std::optional<Vector> minimizer)
    : name_(std::move(name)),
      dimension_(dimension),
      f_star_(f_star),
      x0_(std::move(x0)),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      smooth_(std::move(smooth)),
      minimizer_(std::move(minimizer)) {
  if (dimension_ < 1) throw std::invalid_argument("oracle dimension must be positive");
  if (x0_.size() != dimension_)
    throw std::invalid_argument("starting point does not match oracle dimension");
}

double ObjectiveOracle::value(const Vector& x) const {
  const double v = value_(x);
  if (!std::isfinite(v)) throw EvaluationError(name_ + ": non-finite function value");
  return v;
}

Vector ObjectiveOracle::exact_gradient(const Vector& x) const {
  Vector g = gradient_(x);
  if (!g.allFinite()) throw EvaluationError(name_ + ": non-finite gradient");
  return g;
}

bool ObjectiveOracle::is_smooth(const Vector& x) const { return !smooth_ || smooth_(x); }

Vector gradient(const ObjectiveOracle& oracle, const GradientMode& mode, const Vector& x) {
  if (mode.kind == GradientKind::Exact) return oracle.exact_gradient(x);
  mode.validate();
  const double fx = oracle.value(x);
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + mode.h;
    g(i) = (oracle.value(probe) - fx) / mode.h;
    probe(i) = x(i);
  }
  if (!g.allFinite()) throw EvaluationError(oracle.name() + ": non-finite difference quotient");
  return g;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {1, "TiltedNorm", 0, "0"},
      {2, "MXHILB-gen", 0, "0"},
      {3, "ChainedLQ", 0, "-(n-1)*sqrt(2)"},
      {4, "ChainedCB3I", 0, "2*(n-1)"},
      {5, "ChainedCB3II", 0, "2*(n-1)"},
      {6, "MAXQ-gen", 0, "0"},
      {7, "MAXL-gen", 0, "0"},
      {8, "PartlySmooth", 0, "0"},
      {9, "QL", 2, "7.2"},
      {10, "Mifflin1", 2, "-1"},
      {11, "MAXQ", 20, "0"},
      {12, "Goffin", 50, "0"},
      {13, "Rosen", 4, "-44"},
  };
  return entries;
}

ObjectiveOracle make_problem(std::string_view name, int n) {
  const std::string key = lower(name);
  const CatalogEntry* entry = nullptr;
  for (const auto& e : catalog()) {
    if (lower(e.name) == key || std::to_string(e.number) == key) {
      entry = &e;
      break;
    }
  }
  if (entry == nullptr) throw std::invalid_argument("unknown problem: " + std::string(name));
  if (entry->fixed_dimension != 0 && n != entry->fixed_dimension) {
    throw std::invalid_argument(entry->name + " is only defined for n = " +
                                std::to_string(entry->fixed_dimension));
  }
  if (entry->fixed_dimension == 0 && n < 2)
    throw std::invalid_argument(entry->name + " needs n >= 2");

  switch (entry->number) {
    case 1: return tilted_norm(n);
    case 2: return mxhilb(n);
    case 3: return chained_lq(n);
    case 4: return chained_cb3_1(n);
    case 5: return chained_cb3_2(n);
    case 6: return maxq("MAXQ-gen", n);
    case 7: return maxl(n);
    case 8: return partly_smooth(n);
    case 9: return ql();
    case 10: return mifflin1();
    case 11: return maxq("MAXQ", n);
    case 12: return goffin(n);
    case 13: return rosen();
    default: break;
  }
  throw std::logic_error("catalog entry without constructor");
}

ObjectiveOracle make_abs_1d() {
  auto f = [](const Vector& x) { return std::abs(x(0)); };
  auto g = [](const Vector& x) { return Vector::Constant(1, sign(x(0))); };
  auto smooth = [](const Vector& x) { return x(0) != 0.0; };
  return {"Abs1D", 1, 0.0, Vector::Ones(1), f, g, smooth, Vector(Vector::Zero(1))};
}

ObjectiveOracle make_sum_of_squares(int n) {
  auto f = [](const Vector& x) { return x.squaredNorm(); };
  auto g = [](const Vector& x) { return Vector(2.0 * x); };
  return {"SumOfSquares", n, 0.0, Vector::Ones(n), f, g, nullptr, Vector(Vector::Zero(n))};
}

}  // namespace bundlegs::problems

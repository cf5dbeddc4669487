#pragma once

#include "bundlegs/problems.hpp"

namespace bundlegs {

/// Wraps an oracle with a gradient mode and counts evaluations. One per
/// solver run; not shared between threads.
class Evaluator {
 public:
  Evaluator(const problems::ObjectiveOracle& oracle, problems::GradientMode mode)
      : oracle_(&oracle), mode_(mode) {
    mode_.validate();
  }

  double value(const Vector& x) {
    ++value_evals_;
    return oracle_->value(x);
  }

  Vector gradient(const Vector& x) {
    ++grad_evals_;
    return problems::gradient(*oracle_, mode_, x);
  }

  bool is_smooth(const Vector& x) const { return oracle_->is_smooth(x); }

  const problems::ObjectiveOracle& oracle() const { return *oracle_; }
  const problems::GradientMode& mode() const { return mode_; }
  long grad_evals() const { return grad_evals_; }
  long value_evals() const { return value_evals_; }

 private:
  const problems::ObjectiveOracle* oracle_;
  problems::GradientMode mode_;
  long grad_evals_ = 0;
  long value_evals_ = 0;
};

}  // namespace bundlegs

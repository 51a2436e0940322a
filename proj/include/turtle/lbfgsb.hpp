#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "turtle/types.hpp"

namespace turtle {

// Elementwise box; +-inf marks an unconstrained coordinate.
struct Bounds {
  Vec lower;
  Vec upper;

  Vec clamp(const Vec& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

struct OptimizerConfig {
  int memory = 10;        // stored curvature pairs
  int max_iters = 500;
  double grad_tol = 1e-6; // infinity norm of the projected gradient
  double f_tol = 1e-10;   // relative objective change
};

enum class StopReason { grad_tol, f_tol, max_iters, line_search };

struct OptTrace {
  std::vector<double> objective; // maximization values, non-decreasing
  std::vector<double> pg_norm;
  StopReason reason = StopReason::max_iters;
};

struct MaximizeResult {
  Vec x;
  double f = 0.0;
  OptTrace trace;
  int evals = 0;
};

// Thrown when f or the gradient is non-finite at a feasible point.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& msg, Vec iterate)
      : std::runtime_error(msg), iterate_(std::move(iterate)) {}
  const Vec& iterate() const { return iterate_; }

 private:
  Vec iterate_;
};

// Returns f and fills the gradient.
using FgFunc = std::function<double(const Vec&, Vec&)>;

// Box-constrained maximization: limited-memory BFGS with gradient projection
// and a Wolfe line search restricted to the feasible segment.
MaximizeResult maximize(const FgFunc& fg, const Vec& x0, const Bounds& bounds,
                        const OptimizerConfig& cfg = {});

MaximizeResult maximize(const std::function<double(const Vec&)>& f,
                        const std::function<Vec(const Vec&)>& grad, const Vec& x0,
                        const Bounds& bounds, const OptimizerConfig& cfg = {});

} // namespace turtle

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace stimtomo {

/// Returns f(x) and writes the gradient into the second argument.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

struct MinimizeOptions {
  int max_iterations = 2000;
  double gradient_tolerance = 1e-10;  ///< on the max-norm of the gradient
  /// Stop once f falls below this; the problem is solved exactly.
  double target_value = 0.0;
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// BFGS with a strong-Wolfe line search. Also reports convergence when the
/// line search can no longer decrease f and the gradient is at rounding
/// level, which is how smooth fits on the PSD boundary end.
MinimizeResult minimize_bfgs(const Objective& objective, std::vector<double> x0,
                             const MinimizeOptions& opts);

}  // namespace stimtomo

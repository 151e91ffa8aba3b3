#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace qhd {

// Returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BfgsOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-8; // infinity norm
  double step_tolerance = 1e-10;    // infinity norm of the last accepted step
  // Armijo and curvature constants of the strong Wolfe line search.
  double c1 = 1e-4;
  double c2 = 0.9;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  double last_step = 0.0;
  bool converged = false;
  std::string message;
};

// Minimizes `f` by BFGS with a strong Wolfe line search. `frozen` marks
// coordinates held at their starting value (may be empty).
BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& options = {},
                         const std::vector<bool>& frozen = {});

} // namespace qhd

#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace tvpose {

struct LmOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
  // Accepted steps that lower the cost by less than this fraction end the
  // solve.
  double relative_cost_tolerance = 1e-12;
  double initial_damping_factor = 1e-3;
};

enum class LmTermination {
  kGradient,
  kStep,
  kCostChange,
  kMaxIterations,
  kNumericalFailure,
};

std::string_view ToString(LmTermination t);

struct LmReport {
  int iterations = 0;
  int accepted_steps = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  LmTermination termination = LmTermination::kMaxIterations;
  // Cost after the initial evaluation and after every accepted step.
  std::vector<double> cost_history;

  bool converged() const {
    return termination != LmTermination::kMaxIterations &&
           termination != LmTermination::kNumericalFailure;
  }
};

// Evaluates residuals r(x) and, when `jacobian` is non-null, dr/dx.
using LmFunction = std::function<void(const Eigen::VectorXd& x,
                                      Eigen::VectorXd* residuals,
                                      Eigen::MatrixXd* jacobian)>;

// Minimizes |r(x)|^2 with Levenberg damping: mu starts at
// factor * max diag(J^T J), doubles on a rejected step and shrinks by 3 on
// an accepted one. Accepted costs never increase.
LmReport LevenbergMarquardt(const LmFunction& function, Eigen::VectorXd* x,
                            const LmOptions& options = {});

}  // namespace tvpose

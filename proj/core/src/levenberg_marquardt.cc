#include "tvpose/levenberg_marquardt.h"

#include <cmath>

#include <Eigen/Cholesky>

namespace tvpose {

std::string_view ToString(LmTermination t) {
  switch (t) {
    case LmTermination::kGradient:
      return "gradient";
    case LmTermination::kStep:
      return "step";
    case LmTermination::kCostChange:
      return "cost_change";
    case LmTermination::kMaxIterations:
      return "max_iterations";
    case LmTermination::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

LmReport LevenbergMarquardt(const LmFunction& function, Eigen::VectorXd* x,
                            const LmOptions& options) {
  LmReport report;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  function(*x, &r, &J);
  double cost = r.squaredNorm();
  report.initial_cost = cost;
  report.final_cost = cost;
  report.cost_history.push_back(cost);
  if (!std::isfinite(cost)) {
    report.termination = LmTermination::kNumericalFailure;
    return report;
  }

  Eigen::MatrixXd H = J.transpose() * J;
  Eigen::VectorXd g = J.transpose() * r;
  double mu = options.initial_damping_factor * H.diagonal().maxCoeff();
  if (!(mu > 0.0)) mu = options.initial_damping_factor;

  Eigen::VectorXd r_new;
  while (true) {
    if (g.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      report.termination = LmTermination::kGradient;
      break;
    }
    if (report.iterations >= options.max_iterations) {
      report.termination = LmTermination::kMaxIterations;
      break;
    }
    ++report.iterations;

    Eigen::MatrixXd A = H;
    A.diagonal().array() += mu;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const Eigen::VectorXd step = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      mu *= 2.0;
      if (!std::isfinite(mu)) {
        report.termination = LmTermination::kNumericalFailure;
        break;
      }
      continue;
    }
    if (step.norm() < options.step_tolerance) {
      report.termination = LmTermination::kStep;
      break;
    }

    const Eigen::VectorXd x_new = *x + step;
    function(x_new, &r_new, nullptr);
    const double cost_new = r_new.squaredNorm();
    if (std::isfinite(cost_new) && cost_new < cost) {
      const double reduction = cost - cost_new;
      *x = x_new;
      cost = cost_new;
      ++report.accepted_steps;
      report.cost_history.push_back(cost);
      mu /= 3.0;
      if (reduction <= options.relative_cost_tolerance * cost) {
        report.termination = LmTermination::kCostChange;
        break;
      }
      function(*x, &r, &J);
      H.noalias() = J.transpose() * J;
      g.noalias() = J.transpose() * r;
    } else {
      mu *= 2.0;
    }
  }
  report.final_cost = cost;
  return report;
}

}  // namespace tvpose

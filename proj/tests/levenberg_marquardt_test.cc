#include "tvpose/levenberg_marquardt.h"

#include <cmath>

#include <Eigen/QR>
#include <gtest/gtest.h>

namespace tvpose {
namespace {

void Rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd* r,
                Eigen::MatrixXd* J) {
  r->resize(2);
  (*r)[0] = 10.0 * (x[1] - x[0] * x[0]);
  (*r)[1] = 1.0 - x[0];
  if (J) {
    J->resize(2, 2);
    *J << -20.0 * x[0], 10.0, -1.0, 0.0;
  }
}

TEST(LevenbergMarquardt, SolvesRosenbrock) {
  Eigen::VectorXd x(2);
  x << -1.2, 1.0;
  const LmReport report = LevenbergMarquardt(Rosenbrock, &x);
  EXPECT_TRUE(report.converged()) << ToString(report.termination);
  EXPECT_NEAR(x[0], 1.0, 1e-8);
  EXPECT_NEAR(x[1], 1.0, 1e-8);
  EXPECT_LT(report.final_cost, 1e-20);
}

TEST(LevenbergMarquardt, AcceptedCostsNeverIncrease) {
  for (double start : {-3.0, -1.2, 0.5, 2.5}) {
    Eigen::VectorXd x(2);
    x << start, -start;
    const LmReport report = LevenbergMarquardt(Rosenbrock, &x);
    ASSERT_EQ(static_cast<int>(report.cost_history.size()),
              report.accepted_steps + 1);
    EXPECT_DOUBLE_EQ(report.cost_history.front(), report.initial_cost);
    EXPECT_DOUBLE_EQ(report.cost_history.back(), report.final_cost);
    for (size_t i = 1; i < report.cost_history.size(); ++i) {
      EXPECT_LE(report.cost_history[i], report.cost_history[i - 1]);
    }
  }
}

TEST(LevenbergMarquardt, LinearProblemConvergesOnGradient) {
  Eigen::MatrixXd A(4, 2);
  A << 1, 2, 3, 4, 5, 6, 7, 9;
  Eigen::VectorXd b(4);
  b << 1, -1, 2, 0.5;
  auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* r,
               Eigen::MatrixXd* J) {
    *r = A * x - b;
    if (J) *J = A;
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  const LmReport report = LevenbergMarquardt(f, &x);
  const Eigen::VectorXd expected = A.colPivHouseholderQr().solve(b);
  EXPECT_NEAR((x - expected).norm(), 0.0, 1e-9);
  EXPECT_TRUE(report.converged());
}

TEST(LevenbergMarquardt, ReportsNonFiniteResiduals) {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* r,
              Eigen::MatrixXd* J) {
    r->resize(1);
    (*r)[0] = std::nan("");
    if (J) *J = Eigen::MatrixXd::Ones(1, x.size());
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  const LmReport report = LevenbergMarquardt(f, &x);
  EXPECT_EQ(report.termination, LmTermination::kNumericalFailure);
  EXPECT_FALSE(report.converged());
}

}  // namespace
}  // namespace tvpose

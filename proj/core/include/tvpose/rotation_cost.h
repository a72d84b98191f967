#pragma once

#include <vector>

#include <Eigen/Core>

#include "tvpose/coplanarity.h"
#include "tvpose/geometry.h"
#include "tvpose/tracks.h"

namespace tvpose {

// The two unknown relative rotations R10 (frame 0 -> frame 1) and R12
// (frame 2 -> frame 1), each on the Cayley chart.
struct RotationPair {
  Vector3 c10 = Vector3::Zero();
  Vector3 c12 = Vector3::Zero();

  Matrix3 R10() const { return CayleyToRotation(c10); }
  Matrix3 R12() const { return CayleyToRotation(c12); }

  Eigen::Matrix<double, 6, 1> AsVector() const;
  static RotationPair FromVector(const Eigen::Matrix<double, 6, 1>& x);
  static RotationPair FromMatrices(const Matrix3& R10, const Matrix3& R12);
};

enum class LineResidualForm {
  // |n0 . (n1 x n2)|, one residual per line.
  kMult,
  // Projections of the three normals onto the fitted line direction, three
  // residuals per line summing to the minimal eigenvalue.
  kMini,
};

// Two-view epipolar term in frame 1: n = b1 x R1k bk.
struct PointPairTerm {
  Vector3 b1;
  Vector3 bk;
  double weight = 1.0;
  // Index into the source track list.
  int track = -1;
};

struct LineTerm {
  LineNormals normals;
  double weight = 1.0;
  int track = -1;
};

struct RotationProblem {
  std::vector<PointPairTerm> pairs10;
  std::vector<PointPairTerm> pairs12;
  std::vector<LineTerm> lines;
  LineResidualForm line_form = LineResidualForm::kMult;

  int NumResiduals() const;
};

// Assembles terms from the masked tracks. Point tracks contribute to every
// pair (1,0) and (1,2) in which they are observed. Empty masks select all.
RotationProblem BuildRotationProblem(const TrackSet& tracks,
                                     const std::vector<bool>& point_mask,
                                     const std::vector<bool>& line_mask,
                                     bool use_points, bool use_lines,
                                     LineResidualForm form);

struct CostBreakdown {
  double total = 0.0;
  double points10 = 0.0;
  double points12 = 0.0;
  double lines = 0.0;
};

// Weighted combined cost
//   E = lambda_min(M10(w)) + lambda_min(M12(w)) + sum_i w_i e_i^2
// together with the stacked residuals (sum of squares == E) and their
// Jacobian with respect to (c10, c12). Point residuals are the projections of
// the weighted epipolar normals on the minimal eigenvector.
CostBreakdown EvaluateRotationCost(const RotationProblem& problem,
                                   const RotationPair& state,
                                   Eigen::VectorXd* residuals = nullptr,
                                   Eigen::MatrixXd* jacobian = nullptr);

}  // namespace tvpose

#include "tvpose/rotation_cost.h"

#include <algorithm>
#include <cmath>

namespace tvpose {
namespace {

// Variable-projection (Kaufman) Jacobian of r = N v, where v is the minimal
// eigenvector of M = N^T N. `A` holds the columns dN_i v on input and the
// corrected columns (I - N (M - l0 I)^+ N^T) dN_i v on output. The
// correction does not change the gradient J^T r.
void ProjectJacobian(const Eigen::MatrixX3d& N, const SymEigen3& eig,
                     Eigen::MatrixXd* A) {
  for (int k = 1; k < 3; ++k) {
    const double gap = eig.values[k] - eig.values[0];
    if (!(gap > 1e-12 * std::max(eig.values[2], 1e-300))) continue;
    const Eigen::VectorXd u = N * eig.vectors.col(k);
    A->noalias() -= u * (u.transpose() * *A) / gap;
  }
}

// Residuals of one epipolar block; fills rows [row, row + terms.size()) and
// the three Jacobian columns starting at `col`.
double EvaluateNecBlock(const std::vector<PointPairTerm>& terms,
                        const Matrix3& R, const std::array<Matrix3, 3>& dR,
                        int row, int col, Eigen::VectorXd* residuals,
                        Eigen::MatrixXd* jacobian) {
  const int m = static_cast<int>(terms.size());
  if (m == 0) return 0.0;
  std::vector<Vector3> normals(m);
  std::vector<double> weights(m);
  for (int j = 0; j < m; ++j) {
    normals[j] = terms[j].b1.cross(R * terms[j].bk);
    weights[j] = terms[j].weight;
  }
  const CoplanarityMatrix M = CoplanarityMatrix::FromNormals(normals, weights);
  const Vector3 v = M.MinEigenvector();
  // Rows sqrt(w) n^T; skipped terms stay zero.
  Eigen::MatrixX3d N = Eigen::MatrixX3d::Zero(m, 3);
  Eigen::MatrixXd A;
  if (jacobian) A.setZero(m, 3);
  double cost = 0.0;
  for (int j = 0; j < m; ++j) {
    if (!(normals[j].norm() >= kMinNormalNorm)) continue;
    const double sw = std::sqrt(terms[j].weight);
    N.row(j) = sw * normals[j].transpose();
    const double res = sw * v.dot(normals[j]);
    cost += res * res;
    if (jacobian) {
      for (int i = 0; i < 3; ++i) {
        A(j, i) = sw * v.dot(terms[j].b1.cross(dR[i] * terms[j].bk));
      }
    }
  }
  if (residuals) residuals->segment(row, m) = N * v;
  if (jacobian) {
    ProjectJacobian(N, M.eigen(), &A);
    jacobian->block(row, col, m, 3) = A;
  }
  return cost;
}

}  // namespace

Eigen::Matrix<double, 6, 1> RotationPair::AsVector() const {
  Eigen::Matrix<double, 6, 1> x;
  x << c10, c12;
  return x;
}

RotationPair RotationPair::FromVector(const Eigen::Matrix<double, 6, 1>& x) {
  RotationPair out;
  out.c10 = x.head<3>();
  out.c12 = x.tail<3>();
  return out;
}

RotationPair RotationPair::FromMatrices(const Matrix3& R10,
                                        const Matrix3& R12) {
  RotationPair out;
  out.c10 = RotationToCayley(R10);
  out.c12 = RotationToCayley(R12);
  return out;
}

int RotationProblem::NumResiduals() const {
  const int per_line = line_form == LineResidualForm::kMult ? 1 : 3;
  return static_cast<int>(pairs10.size() + pairs12.size()) +
         per_line * static_cast<int>(lines.size());
}

RotationProblem BuildRotationProblem(const TrackSet& tracks,
                                     const std::vector<bool>& point_mask,
                                     const std::vector<bool>& line_mask,
                                     bool use_points, bool use_lines,
                                     LineResidualForm form) {
  RotationProblem problem;
  problem.line_form = form;
  if (use_points) {
    for (size_t i = 0; i < tracks.points.size(); ++i) {
      if (!point_mask.empty() && !point_mask[i]) continue;
      const PointTrack& t = tracks.points[i];
      if (t.HasPair(1, 0)) {
        problem.pairs10.push_back(
            {t.bearings[1], t.bearings[0], 1.0, static_cast<int>(i)});
      }
      if (t.HasPair(1, 2)) {
        problem.pairs12.push_back(
            {t.bearings[1], t.bearings[2], 1.0, static_cast<int>(i)});
      }
    }
  }
  if (use_lines) {
    for (size_t i = 0; i < tracks.lines.size(); ++i) {
      if (!line_mask.empty() && !line_mask[i]) continue;
      problem.lines.push_back(
          {tracks.lines[i].normals, 1.0, static_cast<int>(i)});
    }
  }
  return problem;
}

CostBreakdown EvaluateRotationCost(const RotationProblem& problem,
                                   const RotationPair& state,
                                   Eigen::VectorXd* residuals,
                                   Eigen::MatrixXd* jacobian) {
  const int num_residuals = problem.NumResiduals();
  if (residuals) residuals->resize(num_residuals);
  if (jacobian) jacobian->setZero(num_residuals, 6);

  const Matrix3 R10 = state.R10();
  const Matrix3 R12 = state.R12();
  const auto dR10 = CayleyJacobian(state.c10);
  const auto dR12 = CayleyJacobian(state.c12);

  CostBreakdown cost;
  int row = 0;
  cost.points10 = EvaluateNecBlock(problem.pairs10, R10, dR10, row, 0,
                                   residuals, jacobian);
  row += static_cast<int>(problem.pairs10.size());
  cost.points12 = EvaluateNecBlock(problem.pairs12, R12, dR12, row, 3,
                                   residuals, jacobian);
  row += static_cast<int>(problem.pairs12.size());

  for (const LineTerm& term : problem.lines) {
    const double sw = std::sqrt(term.weight);
    const Vector3& n0 = term.normals.n[0];
    const Vector3& n1 = term.normals.n[1];
    const Vector3& n2 = term.normals.n[2];
    const Vector3 m0 = R10 * n0;
    const Vector3 m2 = R12 * n2;
    if (problem.line_form == LineResidualForm::kMult) {
      const Vector3 n1xm2 = n1.cross(m2);
      const double res = sw * m0.dot(n1xm2);
      cost.lines += res * res;
      if (residuals) (*residuals)[row] = res;
      if (jacobian) {
        const Vector3 m0xn1 = m0.cross(n1);
        for (int i = 0; i < 3; ++i) {
          (*jacobian)(row, i) = sw * (dR10[i] * n0).dot(n1xm2);
          // m0 . (n1 x dm2) = dm2 . (m0 x n1)
          (*jacobian)(row, 3 + i) = sw * (dR12[i] * n2).dot(m0xn1);
        }
      }
      ++row;
    } else {
      const std::array<Vector3, 3> m = {m0, n1, m2};
      const CoplanarityMatrix M = CoplanarityMatrix::FromNormals(m);
      const Vector3 v = M.MinEigenvector();
      Eigen::Matrix3d N;
      for (int k = 0; k < 3; ++k) N.row(k) = sw * m[k].transpose();
      const Vector3 r = N * v;
      cost.lines += r.squaredNorm();
      if (residuals) residuals->segment<3>(row) = r;
      if (jacobian) {
        // Columns: c10 moves row 0, c12 moves row 2.
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 6);
        for (int i = 0; i < 3; ++i) {
          A(0, i) = sw * v.dot(dR10[i] * n0);
          A(2, 3 + i) = sw * v.dot(dR12[i] * n2);
        }
        // The unweighted eigen gaps scale by w in N^T N.
        SymEigen3 eig = M.eigen();
        eig.values *= term.weight;
        ProjectJacobian(N, eig, &A);
        jacobian->block(row, 0, 3, 6) = A;
      }
      row += 3;
    }
  }
  cost.total = cost.points10 + cost.points12 + cost.lines;
  return cost;
}

}  // namespace tvpose

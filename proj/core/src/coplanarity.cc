#include "tvpose/coplanarity.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvpose {

CoplanarityMatrix CoplanarityMatrix::FromNormals(
    std::span<const Vector3> normals, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != normals.size()) {
    throw std::invalid_argument("CoplanarityMatrix: weight count mismatch");
  }
  CoplanarityMatrix out;
  std::vector<Vector3> kept;
  std::vector<double> w;
  kept.reserve(normals.size());
  w.reserve(normals.size());
  for (size_t j = 0; j < normals.size(); ++j) {
    const Vector3& n = normals[j];
    if (!(n.norm() >= kMinNormalNorm)) continue;
    const double wj = weights.empty() ? 1.0 : weights[j];
    out.matrix_.noalias() += wj * n * n.transpose();
    kept.push_back(n);
    w.push_back(wj);
  }
  out.num_terms_ = static_cast<int>(kept.size());
  out.eigen_ = SolveSymmetric3(out.matrix_);
  const Vector3 v = out.eigen_.vectors.col(0);
  double rayleigh = 0.0;
  for (size_t j = 0; j < kept.size(); ++j) {
    const double r = v.dot(kept[j]);
    rayleigh += w[j] * r * r;
  }
  out.min_eigenvalue_ = rayleigh;
  return out;
}

CoplanarityMatrix NecMatrix(std::span<const Vector3> bearings_a,
                            std::span<const Vector3> bearings_b,
                            const Matrix3& R_ab,
                            std::span<const double> weights) {
  if (bearings_a.size() != bearings_b.size()) {
    throw std::invalid_argument("NecMatrix: bearing count mismatch");
  }
  std::vector<Vector3> normals(bearings_a.size());
  for (size_t j = 0; j < bearings_a.size(); ++j) {
    normals[j] = EpipolarNormal(bearings_a[j], bearings_b[j], R_ab);
  }
  return CoplanarityMatrix::FromNormals(normals, weights);
}

std::array<Vector3, 3> NormalsInFrame1(const LineNormals& line,
                                       const Matrix3& R10,
                                       const Matrix3& R12) {
  return {R10 * line.n[0], line.n[1], R12 * line.n[2]};
}

CoplanarityMatrix NbcMatrix(const LineNormals& line, const Matrix3& R10,
                            const Matrix3& R12) {
  const auto normals = NormalsInFrame1(line, R10, R12);
  return CoplanarityMatrix::FromNormals(normals);
}

double NbcMiniResidual(const CoplanarityMatrix& M) {
  return M.MinEigenvalue();
}

double NbcMultResidual(const std::array<Vector3, 3>& normals) {
  return std::abs(TripleProduct(normals[0], normals[1], normals[2]));
}

double NbcMultResidual(const CoplanarityMatrix& M) {
  return std::sqrt(std::max(0.0, M.matrix().determinant()));
}

}  // namespace tvpose

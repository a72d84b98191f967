#pragma once

#include <span>
#include <vector>

#include "tvpose/geometry.h"
#include "tvpose/sym_eigen3.h"

namespace tvpose {

// Normals below this norm carry no direction and are skipped.
inline constexpr double kMinNormalNorm = 1e-12;

// M = sum_j w_j n_j n_j^T together with its eigen pairs.
class CoplanarityMatrix {
 public:
  CoplanarityMatrix() = default;

  // Normals are accumulated as given; terms with norm below kMinNormalNorm
  // are skipped. `weights` may be empty (all ones).
  static CoplanarityMatrix FromNormals(std::span<const Vector3> normals,
                                       std::span<const double> weights = {});

  const Matrix3& matrix() const { return matrix_; }
  const SymEigen3& eigen() const { return eigen_; }
  int num_terms() const { return num_terms_; }

  // Smallest eigenvalue. When built from normals this is the Rayleigh
  // quotient sum_j w_j (v^T n_j)^2 of the computed eigenvector, which does
  // not inherit the rounding of the explicitly formed matrix.
  double MinEigenvalue() const { return min_eigenvalue_; }
  // Unit eigenvector of the smallest eigenvalue (the fitted direction).
  Vector3 MinEigenvector() const { return eigen_.vectors.col(0); }

 private:
  Matrix3 matrix_ = Matrix3::Zero();
  SymEigen3 eigen_;
  double min_eigenvalue_ = 0.0;
  int num_terms_ = 0;
};

// Matrix of the unnormalized epipolar-plane normals b_a x R_ab b_b (unit
// bearings), expressed in frame a.
CoplanarityMatrix NecMatrix(std::span<const Vector3> bearings_a,
                            std::span<const Vector3> bearings_b,
                            const Matrix3& R_ab,
                            std::span<const double> weights = {});

// Back-projected plane normals of one line, each given in its own frame.
struct LineNormals {
  std::array<Vector3, 3> n;
};

// The three normals rotated into frame 1: {R10 n0, n1, R12 n2}.
std::array<Vector3, 3> NormalsInFrame1(const LineNormals& line,
                                       const Matrix3& R10,
                                       const Matrix3& R12);

CoplanarityMatrix NbcMatrix(const LineNormals& line, const Matrix3& R10,
                            const Matrix3& R12);

// Minimal-eigenvalue residual (squared distance of the normals to their
// fitted plane).
double NbcMiniResidual(const CoplanarityMatrix& M);

// Volume of the parallelepiped spanned by the three unit normals,
// |n0 . (n1 x n2)|, equal to sqrt(det M).
double NbcMultResidual(const std::array<Vector3, 3>& normals);
// Same quantity from the eigenvalue product, sqrt(max(det M, 0)).
double NbcMultResidual(const CoplanarityMatrix& M);

// Signed scalar triple product n0 . (n1 x n2).
inline double TripleProduct(const Vector3& a, const Vector3& b,
                            const Vector3& c) {
  return a.dot(b.cross(c));
}

}  // namespace tvpose

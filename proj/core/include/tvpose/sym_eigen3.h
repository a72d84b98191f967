#pragma once

#include "tvpose/geometry.h"

namespace tvpose {

// Eigen decomposition of a symmetric 3x3 matrix. Eigenvalues are ascending;
// column i of `vectors` belongs to values[i]. Each eigenvector is unit length
// with its largest-magnitude component positive.
struct SymEigen3 {
  Vector3 values;
  Matrix3 vectors;
  // True when the Jacobi fallback was used (clustered eigenvalues).
  bool used_jacobi = false;
};

// Closed-form trigonometric solve of the characteristic cubic, falling back to
// cyclic Jacobi rotations when two eigenvalues are closer than 1e-12 relative
// to the matrix scale.
SymEigen3 SolveSymmetric3(const Matrix3& A);

// Cyclic Jacobi rotations; exposed for testing.
SymEigen3 SolveSymmetric3Jacobi(const Matrix3& A);

}  // namespace tvpose

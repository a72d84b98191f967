#include "tvpose/sym_eigen3.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tvpose {
namespace {

constexpr double kGapTolerance = 1e-12;

void SortAndCanonicalize(SymEigen3* eig) {
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return eig->values[a] < eig->values[b];
  });
  Vector3 values;
  Matrix3 vectors;
  for (int i = 0; i < 3; ++i) {
    values[i] = eig->values[order[i]];
    vectors.col(i) = CanonicalSign(eig->vectors.col(order[i]).normalized());
  }
  eig->values = values;
  eig->vectors = vectors;
}

// Null vector of the (rank-2) matrix A - lambda I from the largest cross
// product of its rows.
Vector3 NullVector(const Matrix3& A, double lambda) {
  const Matrix3 B = A - lambda * Matrix3::Identity();
  const Vector3 r0 = B.row(0).transpose();
  const Vector3 r1 = B.row(1).transpose();
  const Vector3 r2 = B.row(2).transpose();
  const std::array<Vector3, 3> candidates = {r0.cross(r1), r0.cross(r2),
                                             r1.cross(r2)};
  int best = 0;
  double best_norm = candidates[0].squaredNorm();
  for (int i = 1; i < 3; ++i) {
    const double n = candidates[i].squaredNorm();
    if (n > best_norm) {
      best_norm = n;
      best = i;
    }
  }
  return candidates[best] / std::sqrt(best_norm);
}

}  // namespace

SymEigen3 SolveSymmetric3Jacobi(const Matrix3& input) {
  Matrix3 A = 0.5 * (input + input.transpose());
  Matrix3 V = Matrix3::Identity();
  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = A(0, 1) * A(0, 1) + A(0, 2) * A(0, 2) + A(1, 2) * A(1, 2);
    if (off <= 1e-300 ||
        off <= 1e-34 * (A.diagonal().squaredNorm() + off)) {
      break;
    }
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (A(p, q) == 0.0) continue;
        const double tau = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        Matrix3 J = Matrix3::Identity();
        J(p, p) = c;
        J(q, q) = c;
        J(p, q) = s;
        J(q, p) = -s;
        A = J.transpose() * A * J;
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        V = V * J;
      }
    }
  }
  SymEigen3 out;
  out.values = A.diagonal();
  out.vectors = V;
  out.used_jacobi = true;
  SortAndCanonicalize(&out);
  return out;
}

SymEigen3 SolveSymmetric3(const Matrix3& input) {
  const Matrix3 A = 0.5 * (input + input.transpose());
  const double scale = A.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    SymEigen3 out;
    out.values.setZero();
    out.vectors.setIdentity();
    return out;
  }
  // Work on the shifted, scaled matrix B = (A - q I) / p so that the
  // characteristic equation becomes det(B - beta I) = 0 with roots
  // 2 cos(phi + 2 pi k / 3).
  const Matrix3 As = A / scale;
  const double q = As.trace() / 3.0;
  const Matrix3 shifted = As - q * Matrix3::Identity();
  const double p2 = shifted.squaredNorm() / 6.0;
  const double p = std::sqrt(p2);
  if (p < kGapTolerance) {
    // Scalar multiple of the identity.
    SymEigen3 out;
    out.values.setConstant(q * scale);
    out.vectors.setIdentity();
    return out;
  }
  const Matrix3 B = shifted / p;
  const double half_det = std::clamp(0.5 * B.determinant(), -1.0, 1.0);
  const double phi = std::acos(half_det) / 3.0;
  Vector3 beta;
  beta[2] = 2.0 * std::cos(phi);
  beta[0] = 2.0 * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  beta[1] = -beta[0] - beta[2];
  const Vector3 values = (q + p * beta.array()).matrix();

  const double gap01 = std::abs(values[1] - values[0]);
  const double gap12 = std::abs(values[2] - values[1]);
  if (gap01 < kGapTolerance || gap12 < kGapTolerance) {
    return SolveSymmetric3Jacobi(input);
  }

  // The eigenvalue farther from the middle one has a well-conditioned null
  // vector; the remaining pair is resolved exactly on its orthogonal
  // complement with a single 2x2 rotation.
  const int isolated = gap12 >= gap01 ? 2 : 0;
  const Vector3 v_iso = NullVector(As, values[isolated]);
  const Vector3 u = v_iso.unitOrthogonal();
  const Vector3 w = v_iso.cross(u);
  const double a = u.dot(As * u);
  const double b = u.dot(As * w);
  const double c = w.dot(As * w);
  const double angle = 0.5 * std::atan2(2.0 * b, a - c);
  const Vector3 e_big = std::cos(angle) * u + std::sin(angle) * w;
  const Vector3 e_small = -std::sin(angle) * u + std::cos(angle) * w;

  SymEigen3 out;
  out.vectors.col(0) = e_big;
  out.vectors.col(1) = e_small;
  out.vectors.col(2) = v_iso;
  // Rayleigh quotients are consistent with the returned vectors.
  for (int i = 0; i < 3; ++i) {
    out.values[i] = out.vectors.col(i).dot(A * out.vectors.col(i));
  }
  SortAndCanonicalize(&out);
  return out;
}

}  // namespace tvpose

#include "tvpose/sym_eigen3.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "test_util.h"

namespace tvpose {
namespace {

using testing::CharacteristicRoots;

void ExpectValidDecomposition(const Matrix3& A, const SymEigen3& eig,
                              double tol) {
  const double scale = std::max(1.0, A.norm());
  EXPECT_LE(eig.values[0], eig.values[1]);
  EXPECT_LE(eig.values[1], eig.values[2]);
  EXPECT_NEAR((eig.vectors.transpose() * eig.vectors - Matrix3::Identity())
                  .norm(),
              0.0, 1e-9);
  for (int i = 0; i < 3; ++i) {
    const Vector3 v = eig.vectors.col(i);
    EXPECT_NEAR((A * v - eig.values[i] * v).norm(), 0.0, tol * scale);
    EXPECT_EQ(CanonicalSign(v), v);
  }
}

TEST(SymEigen3, MatchesCharacteristicPolynomialOnRandomPsd) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Matrix3 B;
    for (int k = 0; k < 9; ++k) B.data()[k] = u(rng);
    const Matrix3 A = B * B.transpose();
    const SymEigen3 eig = SolveSymmetric3(A);
    const std::array<double, 3> roots = CharacteristicRoots(A);
    for (int k = 0; k < 3; ++k) {
      worst = std::max(worst, std::abs(eig.values[k] - roots[k]));
    }
    ExpectValidDecomposition(A, eig, 1e-9);
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(SymEigen3, RankDeficientPsd) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Vector3 a = testing::RandomUnit(&rng);
    const Vector3 b = testing::RandomUnit(&rng);
    const Matrix3 A = a * a.transpose() + 0.5 * b * b.transpose();
    const SymEigen3 eig = SolveSymmetric3(A);
    EXPECT_NEAR(eig.values[0], 0.0, 1e-12);
    EXPECT_NEAR(std::abs(eig.vectors.col(0).dot(a.cross(b).normalized())),
                1.0, 1e-9);
    ExpectValidDecomposition(A, eig, 1e-9);
  }
}

TEST(SymEigen3, ClusteredEigenvalues) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Matrix3 Q = testing::RandomRotation(&rng, 3.0);
    const Vector3 d(1.0, 1.0 + 1e-14, 3.0);
    const Matrix3 A = Q * d.asDiagonal() * Q.transpose();
    const SymEigen3 eig = SolveSymmetric3(A);
    EXPECT_NEAR(eig.values[0], 1.0, 1e-12);
    EXPECT_NEAR(eig.values[1], 1.0, 1e-12);
    EXPECT_NEAR(eig.values[2], 3.0, 1e-12);
    EXPECT_NEAR(std::abs(eig.vectors.col(2).dot(Q.col(2))), 1.0, 1e-12);
    ExpectValidDecomposition(A, eig, 1e-12);
  }
  const SymEigen3 identity = SolveSymmetric3(2.0 * Matrix3::Identity());
  EXPECT_EQ(identity.values, Vector3::Constant(2.0));
}

TEST(SymEigen3, JacobiMatchesClosedForm) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Matrix3 B;
    for (int k = 0; k < 9; ++k) B.data()[k] = u(rng);
    const Matrix3 A = B + B.transpose();
    const SymEigen3 closed = SolveSymmetric3(A);
    const SymEigen3 jacobi = SolveSymmetric3Jacobi(A);
    EXPECT_NEAR((closed.values - jacobi.values).norm(), 0.0, 1e-12);
    ExpectValidDecomposition(A, jacobi, 1e-12);
  }
}

}  // namespace
}  // namespace tvpose

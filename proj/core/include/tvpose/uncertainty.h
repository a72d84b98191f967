#pragma once

#include <array>

#include "tvpose/geometry.h"
#include "tvpose/tracks.h"

namespace tvpose {

inline constexpr double kMinWeight = 1e-4;
inline constexpr double kMaxWeight = 1e14;

// Covariance of a line observation over (theta, rho) for a segment of length
// c whose midpoint lies d pixels from the foot point, given a perpendicular
// endpoint uncertainty of std sigma_line:
//
//   [ 2 s^2 / c^2        -2 d s^2 / c^2          ]
//   [ -2 d s^2 / c^2     (1/2 + 2 d^2 / c^2) s^2 ]
struct LineCovariance {
  Matrix2 cov = Matrix2::Zero();
  double sigma_line = 0.0;
};

// Throws std::invalid_argument for c < 1e-6 px.
LineCovariance MakeLineCovariance(double sigma_line, double c, double d);

// Covariance of an observation's line, using the signed midpoint offset.
LineCovariance LineObservationCovariance(const LineObservation& l,
                                         double sigma_line);

struct NormalCovariance {
  Matrix3 cov = Matrix3::Zero();
  // Set when the (theta, rho) covariance was not PSD and had to be
  // regularized with 1e-12 I.
  bool regularized = false;
};

// Unscented propagation of the (theta, rho) covariance through
// n = K^T l / |K^T l|.
NormalCovariance NormalCovarianceUnscented(const LineObservation& l,
                                           const LineCovariance& lambda,
                                           const CameraIntrinsics& K);

// Inverse variance of a scalar residual. `raw_weight` is 1/variance before
// clamping to [kMinWeight, kMaxWeight] (infinite for zero variance).
struct ResidualWeight {
  double variance = 0.0;
  double raw_weight = 0.0;
  double weight = 1.0;
};

ResidualWeight WeightFromVariance(double variance);

// Gradients of the signed triple product (R10 n0) . (n1 x R12 n2) with
// respect to each normal in its own frame.
std::array<Vector3, 3> TripleProductGradients(const LineNormals& line,
                                              const Matrix3& R10,
                                              const Matrix3& R12);

// First-order variance of the line residual under per-frame normal
// covariances.
ResidualWeight LineWeight(const LineNormals& line, const Matrix3& R10,
                          const Matrix3& R12,
                          const std::array<Matrix3, 3>& normal_covs);

// Variance of the epipolar residual t_a^T n, with n = b_a x R_ab b_b over
// unit bearings, under the pixel covariances of both observations.
ResidualWeight PointWeight(const PointTrack& track, int frame_a, int frame_b,
                           const Matrix3& R_ab, const Vector3& t_dir_a,
                           const CameraIntrinsics& K);

}  // namespace tvpose

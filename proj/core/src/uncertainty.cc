#include "tvpose/uncertainty.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace tvpose {
namespace {

Vector3 NormalFromPolar(double theta, double rho, const Matrix3& Kt) {
  return (Kt * Vector3(std::sin(theta), -std::cos(theta), rho)).normalized();
}

// d(b)/d(u, v) for b = h / |h|, h = K^-1 [u v 1]^T.
Eigen::Matrix<double, 3, 2> BearingPixelJacobian(const PixelPoint& p,
                                                 const CameraIntrinsics& K) {
  const Vector3 h = CalibratedHomogeneous(p, K);
  const double norm = h.norm();
  const Vector3 b = h / norm;
  Eigen::Matrix<double, 3, 2> dh = Eigen::Matrix<double, 3, 2>::Zero();
  dh(0, 0) = 1.0 / K.fx;
  dh(1, 1) = 1.0 / K.fy;
  return (Matrix3::Identity() - b * b.transpose()) / norm * dh;
}

}  // namespace

LineCovariance MakeLineCovariance(double sigma_line, double c, double d) {
  if (!(c >= 1e-6)) {
    throw std::invalid_argument("MakeLineCovariance: degenerate segment");
  }
  const double s2 = sigma_line * sigma_line;
  const double c2 = c * c;
  LineCovariance out;
  out.sigma_line = sigma_line;
  out.cov << 2.0 * s2 / c2, -2.0 * d * s2 / c2, -2.0 * d * s2 / c2,
      (0.5 + 2.0 * d * d / c2) * s2;
  return out;
}

LineCovariance LineObservationCovariance(const LineObservation& l,
                                         double sigma_line) {
  return MakeLineCovariance(sigma_line, l.c, l.SignedMidpointOffset());
}

NormalCovariance NormalCovarianceUnscented(const LineObservation& l,
                                           const LineCovariance& lambda,
                                           const CameraIntrinsics& K) {
  NormalCovariance out;
  Matrix2 cov = 0.5 * (lambda.cov + lambda.cov.transpose());
  if (cov.isZero(0.0)) return out;

  Eigen::LLT<Matrix2> llt(cov);
  Matrix2 sqrt_cov;
  if (llt.info() == Eigen::Success) {
    sqrt_cov = llt.matrixL();
  } else {
    const Eigen::SelfAdjointEigenSolver<Matrix2> eig(cov);
    Eigen::Vector2d values = eig.eigenvalues();
    const double tol = 1e-15 * std::max(1.0, values.cwiseAbs().maxCoeff());
    if (values.minCoeff() < -tol) {
      out.regularized = true;
      cov += 1e-12 * Matrix2::Identity();
      values = (values.array() + 1e-12).matrix();
    }
    values = values.cwiseMax(0.0);
    sqrt_cov = eig.eigenvectors() * values.cwiseSqrt().asDiagonal();
  }

  // Julier sigma points for a 2-dim state with kappa = 1 (n + kappa = 3).
  constexpr double kSpread = 3.0;
  constexpr double kW0 = 1.0 / 3.0;
  constexpr double kWi = 1.0 / 6.0;
  const Matrix3 Kt = K.Matrix().transpose();
  const Vector2 mean(l.theta, l.rho);
  std::array<Vector3, 5> ys;
  ys[0] = NormalFromPolar(mean[0], mean[1], Kt);
  const double step = std::sqrt(kSpread);
  for (int i = 0; i < 2; ++i) {
    const Vector2 delta = step * sqrt_cov.col(i);
    const Vector2 plus = mean + delta;
    const Vector2 minus = mean - delta;
    ys[1 + 2 * i] = NormalFromPolar(plus[0], plus[1], Kt);
    ys[2 + 2 * i] = NormalFromPolar(minus[0], minus[1], Kt);
  }
  Vector3 y_mean = kW0 * ys[0];
  for (int i = 1; i < 5; ++i) y_mean += kWi * ys[i];
  Matrix3 y_cov = Matrix3::Zero();
  for (int i = 0; i < 5; ++i) {
    const Vector3 dy = ys[i] - y_mean;
    y_cov.noalias() += (i == 0 ? kW0 : kWi) * dy * dy.transpose();
  }
  out.cov = 0.5 * (y_cov + y_cov.transpose());
  return out;
}

ResidualWeight WeightFromVariance(double variance) {
  ResidualWeight out;
  out.variance = variance;
  out.raw_weight = variance > 0.0 ? 1.0 / variance
                                  : std::numeric_limits<double>::infinity();
  out.weight = std::clamp(out.raw_weight, kMinWeight, kMaxWeight);
  if (!std::isfinite(out.weight)) out.weight = kMaxWeight;
  return out;
}

std::array<Vector3, 3> TripleProductGradients(const LineNormals& line,
                                              const Matrix3& R10,
                                              const Matrix3& R12) {
  const Vector3 m0 = R10 * line.n[0];
  const Vector3& m1 = line.n[1];
  const Vector3 m2 = R12 * line.n[2];
  return {R10.transpose() * m1.cross(m2), m2.cross(m0),
          R12.transpose() * m0.cross(m1)};
}

ResidualWeight LineWeight(const LineNormals& line, const Matrix3& R10,
                          const Matrix3& R12,
                          const std::array<Matrix3, 3>& normal_covs) {
  const auto grads = TripleProductGradients(line, R10, R12);
  double variance = 0.0;
  for (int k = 0; k < 3; ++k) {
    variance += grads[k].dot(normal_covs[k] * grads[k]);
  }
  return WeightFromVariance(variance);
}

ResidualWeight PointWeight(const PointTrack& track, int frame_a, int frame_b,
                           const Matrix3& R_ab, const Vector3& t_dir_a,
                           const CameraIntrinsics& K) {
  const Vector3& ba = track.bearings[frame_a];
  const Vector3 rbb = R_ab * track.bearings[frame_b];
  const Vector3 de_dn = t_dir_a.normalized();
  // n = -[R b_b]x b_a  and  n = [b_a]x R b_b.
  const Vector3 de_dba = -Skew(rbb).transpose() * de_dn;
  const Vector3 de_dbb = (Skew(ba) * R_ab).transpose() * de_dn;
  const Vector2 ga =
      BearingPixelJacobian(track.pixels[frame_a], K).transpose() * de_dba;
  const Vector2 gb =
      BearingPixelJacobian(track.pixels[frame_b], K).transpose() * de_dbb;
  const double variance = ga.dot(track.pixel_cov[frame_a] * ga) +
                          gb.dot(track.pixel_cov[frame_b] * gb);
  return WeightFromVariance(variance);
}

}  // namespace tvpose

#include "tvpose/geometry.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tvpose {

Matrix3 CameraIntrinsics::Matrix() const {
  Matrix3 K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

Matrix3 CameraIntrinsics::InverseMatrix() const {
  Matrix3 Kinv;
  Kinv << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return Kinv;
}

bool CameraIntrinsics::IsValid() const {
  return fx > 0.0 && fy > 0.0 && std::isfinite(fx) && std::isfinite(fy) &&
         std::isfinite(cx) && std::isfinite(cy);
}

Vector3 LineObservation::Vector() const {
  return Vector3(std::sin(theta), -std::cos(theta), rho);
}

double LineObservation::SignedMidpointOffset() const {
  const Vector2 normal(std::sin(theta), -std::cos(theta));
  const Vector2 direction(std::cos(theta), std::sin(theta));
  const Vector2 foot = -rho * normal;
  const Vector2 mid(0.5 * (endpoints[0].u + endpoints[1].u),
                    0.5 * (endpoints[0].v + endpoints[1].v));
  return direction.dot(mid - foot);
}

Matrix3 Skew(const Vector3& v) {
  Matrix3 S;
  S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return S;
}

Vector3 BearingFromPixel(const PixelPoint& p, const CameraIntrinsics& K) {
  return CalibratedHomogeneous(p, K).normalized();
}

Vector3 CalibratedHomogeneous(const PixelPoint& p, const CameraIntrinsics& K) {
  return Vector3((p.u - K.cx) / K.fx, (p.v - K.cy) / K.fy, 1.0);
}

Vector3 EpipolarNormal(const Vector3& b0, const Vector3& b1,
                       const Matrix3& R01) {
  return b0.cross(R01 * b1);
}

PlaneNormal BackprojectedNormal(const LineObservation& l,
                                const CameraIntrinsics& K, int frame) {
  PlaneNormal out;
  out.n = (K.Matrix().transpose() * l.Vector()).normalized();
  out.frame = frame;
  return out;
}

LineObservation LineFromEndpoints(const PixelPoint& p1, const PixelPoint& p2) {
  const Vector2 a(p1.u, p1.v);
  const Vector2 b(p2.u, p2.v);
  const double length = (b - a).norm();
  if (!(length >= 1e-9)) {
    throw std::invalid_argument("LineFromEndpoints: degenerate segment");
  }
  // Unit normal (sin t, -cos t) is the segment direction rotated by -90 deg.
  const Vector2 dir = (b - a) / length;
  Vector2 normal(dir.y(), -dir.x());
  const Vector2 mid = 0.5 * (a + b);
  double rho = -normal.dot(mid);
  if (rho < 0.0) {
    rho = -rho;
    normal = -normal;
  }
  double theta = std::atan2(normal.x(), -normal.y());
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  if (theta >= 2.0 * std::numbers::pi) theta -= 2.0 * std::numbers::pi;

  LineObservation line;
  line.rho = rho;
  line.theta = theta;
  line.endpoints = {p1, p2};
  line.c = length;
  const Vector2 foot = -rho * Vector2(std::sin(theta), -std::cos(theta));
  line.d = (mid - foot).norm();
  return line;
}

Matrix3 CayleyToRotation(const Vector3& c) {
  const Matrix3 C = Skew(c);
  const double scale = 2.0 / (1.0 + c.squaredNorm());
  return Matrix3::Identity() + scale * (C + C * C);
}

Vector3 RotationToCayley(const Matrix3& R) {
  const Eigen::Quaterniond q(R);
  // c = tan(angle/2) * axis = q.vec / q.w; undefined at 180 degrees.
  return q.vec() / q.w();
}

std::array<Matrix3, 3> CayleyJacobian(const Vector3& c) {
  const Matrix3 C = Skew(c);
  const Matrix3 C2 = C * C;
  const double denom = 1.0 + c.squaredNorm();
  const double scale = 2.0 / denom;
  std::array<Matrix3, 3> out;
  for (int i = 0; i < 3; ++i) {
    const Matrix3 E = Skew(Vector3::Unit(i));
    const double dscale = -4.0 * c[i] / (denom * denom);
    out[i] = dscale * (C + C2) + scale * (E + E * C + C * E);
  }
  return out;
}

Matrix3 RotationFromEuler(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vector3::UnitZ()) *
          Eigen::AngleAxisd(pitch, Vector3::UnitY()) *
          Eigen::AngleAxisd(roll, Vector3::UnitX()))
      .toRotationMatrix();
}

Matrix3 RotationFromAxisAngle(const Vector3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-300) return Matrix3::Identity();
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

double RotationAngleDeg(const Matrix3& R) {
  const Eigen::Quaterniond q(R);
  const double angle = 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
  return angle * 180.0 / std::numbers::pi;
}

double RotationError(const Matrix3& gt_a, const Matrix3& est_a,
                     const Matrix3& gt_b, const Matrix3& est_b) {
  return RotationAngleDeg(gt_a.transpose() * est_a) +
         RotationAngleDeg(gt_b.transpose() * est_b);
}

double DirectionAngleDeg(const Vector3& a, const Vector3& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw std::invalid_argument("DirectionAngleDeg: zero-length direction");
  }
  // atan2 form stays accurate for nearly parallel vectors.
  const double angle = std::atan2(a.cross(b).norm(), a.dot(b));
  return angle * 180.0 / std::numbers::pi;
}

double TranslationDirectionError(const Vector3& gt_a, const Vector3& est_a,
                                 const Vector3& gt_b, const Vector3& est_b) {
  return DirectionAngleDeg(gt_a, est_a) + DirectionAngleDeg(gt_b, est_b);
}

Vector3 CanonicalSign(const Vector3& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  return v[idx] < 0.0 ? Vector3(-v) : v;
}

}  // namespace tvpose

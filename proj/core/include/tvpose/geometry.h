#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tvpose {

using Vector2 = Eigen::Vector2d;
using Vector3 = Eigen::Vector3d;
using Matrix2 = Eigen::Matrix2d;
using Matrix3 = Eigen::Matrix3d;

// Pinhole intrinsics. K = [fx 0 cx; 0 fy cy; 0 0 1].
struct CameraIntrinsics {
  double fx = 800.0;
  double fy = 800.0;
  double cx = 0.0;
  double cy = 0.0;

  Matrix3 Matrix() const;
  Matrix3 InverseMatrix() const;
  bool IsValid() const;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;

  Vector3 Homogeneous() const { return Vector3(u, v, 1.0); }
};

// A 2D line segment observation in polar form. The implied homogeneous line is
// l = (sin(theta), -cos(theta), rho), canonicalized to rho >= 0 and
// theta in [0, 2*pi).
struct LineObservation {
  double rho = 0.0;
  double theta = 0.0;
  std::array<PixelPoint, 2> endpoints;
  // Segment length in pixels.
  double c = 0.0;
  // Distance from the foot point (closest point of the line to the image
  // origin) to the segment midpoint, in pixels.
  double d = 0.0;

  Vector3 Vector() const;
  // Offset of the midpoint from the foot point along the line direction
  // (cos(theta), sin(theta)). |SignedMidpointOffset()| == d.
  double SignedMidpointOffset() const;
};

struct PlaneNormal {
  Vector3 n = Vector3::UnitZ();
  int frame = 0;
};

Matrix3 Skew(const Vector3& v);

Vector3 BearingFromPixel(const PixelPoint& p, const CameraIntrinsics& K);

// Homogeneous calibrated coordinates K^-1 [u v 1]^T (last entry 1).
Vector3 CalibratedHomogeneous(const PixelPoint& p, const CameraIntrinsics& K);

// Normal of the epipolar plane spanned by b0 and R01 * b1, expressed in frame
// 0. Not normalized; the result is (near) zero for parallel rays.
Vector3 EpipolarNormal(const Vector3& b0, const Vector3& b1,
                       const Matrix3& R01);

PlaneNormal BackprojectedNormal(const LineObservation& l,
                                const CameraIntrinsics& K, int frame = 0);

// Throws std::invalid_argument when the endpoints are closer than 1e-9 px.
LineObservation LineFromEndpoints(const PixelPoint& p1, const PixelPoint& p2);

// Cayley chart: R = (I - [c]x)^-1 (I + [c]x).
Matrix3 CayleyToRotation(const Vector3& c);
Vector3 RotationToCayley(const Matrix3& R);
// dR/dc_i for i = 0, 1, 2.
std::array<Matrix3, 3> CayleyJacobian(const Vector3& c);

Matrix3 RotationFromEuler(double roll, double pitch, double yaw);
// Exponential map of an axis-angle vector (radians).
Matrix3 RotationFromAxisAngle(const Vector3& omega);

// Rotation angle of R in degrees, via 2*atan2(|q.vec|, |q.w|).
double RotationAngleDeg(const Matrix3& R);

// Sum of the angles of R_gt^T R_est for both pairs, in degrees.
double RotationError(const Matrix3& gt_a, const Matrix3& est_a,
                     const Matrix3& gt_b, const Matrix3& est_b);

// Angle between two direction vectors in degrees. Throws on zero vectors.
double DirectionAngleDeg(const Vector3& a, const Vector3& b);

double TranslationDirectionError(const Vector3& gt_a, const Vector3& est_a,
                                 const Vector3& gt_b, const Vector3& est_b);

// Flips v so that its largest-magnitude component is positive.
Vector3 CanonicalSign(const Vector3& v);

}  // namespace tvpose

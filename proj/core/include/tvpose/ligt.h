#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tvpose/geometry.h"
#include "tvpose/tracks.h"

namespace tvpose {

// Orientations of the three frames relative to the global frame G, which
// coincides with frame 0: R0G = I, R1G = R10, R2G = R12^T R10.
struct FrameRotations {
  std::array<Matrix3, 3> R_kG = {Matrix3::Identity(), Matrix3::Identity(),
                                 Matrix3::Identity()};

  static FrameRotations FromRelative(const Matrix3& R10, const Matrix3& R12);
  // R_ab = R_aG R_bG^T, taking frame-b coordinates to frame a.
  Matrix3 Relative(int a, int b) const {
    return R_kG[a] * R_kG[b].transpose();
  }
};

// Midpoint triangulation of bearings ba (frame a) and bb (frame b) with
// frame-b center t_ab in frame a: +1 when the point lies in front of both
// cameras, -1 when behind both, 0 otherwise or for parallel rays.
int CheiralityVote(const Vector3& ba, const Vector3& bb, const Matrix3& R_ab,
                   const Vector3& t_ab);

// Linear constraint(s) B Gt0 + C Gt1 + D Gt2 = 0 contributed by one feature.
// Point features give up to three rows, line features one. D = -(B + C).
struct LigtRow {
  enum class Source { kPoint, kLine };
  Source source = Source::kPoint;
  int feature = -1;
  Eigen::MatrixX3d B;
  Eigen::MatrixX3d C;
  Eigen::MatrixX3d D;

  int rows() const { return static_cast<int>(B.rows()); }
  // [B C D], rows x 9.
  Eigen::MatrixXd Stacked() const;
};

// Epipolar rows for the pairs (0,1), (0,2), (1,2) built from calibrated
// homogeneous coordinates. A three-view track yields all three rows with
// the zero blocks in place; a two-view track yields the one row its
// observations support.
LigtRow PointLigtRows(const PointTrack& track, const FrameRotations& rot,
                      const CameraIntrinsics& K);

struct LineDirectionOptions {
  // Lines whose minimal eigenvalue exceeds this are not coplanar enough.
  double max_min_eigenvalue = 0.05;
  // Lines whose middle eigenvalue is below this have (nearly) coincident
  // back-projected planes and no defined direction.
  double min_mid_eigenvalue = 1e-4;
};

// Direction of the 3D line in frame 0 (R01 times the minimal eigenvector of
// the frame-1 coplanarity matrix), sign-canonicalized. Empty when the line
// is rejected.
std::optional<Vector3> LineDirectionEstimate(
    const LineTrack& track, const FrameRotations& rot,
    const LineDirectionOptions& options = {});

// Trifocal line row with the directions of [n0]x R01 n1 and [n0]x R02 n2
// replaced by the estimated line direction r0. Empty when both magnitudes
// fall below 1e-12. The row does not depend on the sign of r0.
std::optional<LigtRow> LineLigtRow(const LineTrack& track,
                                   const FrameRotations& rot,
                                   const Vector3& r0);

struct LigtSystem {
  FrameRotations rotations;
  std::vector<LigtRow> rows;
  // Bearings of point tracks used for the cheirality sign vote.
  std::vector<PointTrack> cheirality_tracks;
  // Lines used for the vote: unit bearing of the segment midpoint and the
  // plane normal, each in its own frame.
  struct LineCheirality {
    std::array<Vector3, 3> midpoint;
    LineNormals normals;
  };
  std::vector<LineCheirality> cheirality_lines;

  // All scalar rows stacked as N x 9. With `normalize`, each scalar row is
  // scaled to unit norm and rows below 1e-12 are dropped.
  Eigen::MatrixXd Stack(bool normalize) const;
};

struct LigtBuildOptions {
  bool use_points = true;
  bool use_lines = true;
  LineDirectionOptions line_direction;
};

LigtSystem BuildLigtSystem(const TrackSet& tracks,
                           const std::vector<bool>& point_mask,
                           const std::vector<bool>& line_mask,
                           const FrameRotations& rotations,
                           const LigtBuildOptions& options = {});

struct TranslationSolution {
  // Global camera positions with Gt0 = 0 and |Gt1| = 1.
  std::array<Vector3, 3> t_G = {Vector3::Zero(), Vector3::Zero(),
                                Vector3::Zero()};
  bool pure_rotation = false;
  int num_rows = 0;
  // Singular values of the full N x 9 system, ascending (the three gauge
  // directions contribute exact zeros).
  Eigen::VectorXd singular_values;
};

// Null vector of the stacked system restricted to the complement of the
// common-translation gauge, then gauge-fixed and sign-resolved by a
// cheirality vote. Flags pure rotation when fewer than five rows remain or
// the fifth-smallest singular value is below 1e-8 of the largest.
TranslationSolution SolveLigt(const LigtSystem& system);

struct RelativeTranslations {
  // Unit directions 0t1 = R0G (Gt1 - Gt0) and 1t2 = R1G (Gt2 - Gt1).
  Vector3 t01 = Vector3::Zero();
  Vector3 t12 = Vector3::Zero();
  bool pure_rotation = false;
};

RelativeTranslations ComputeRelativeTranslations(
    const TranslationSolution& solution, const FrameRotations& rotations);

// Median angle (radians) between b1 and R1k bk over the point pairs (1,0)
// and (1,2); the parallax left after compensating rotation. Empty without
// point pairs.
std::optional<double> MedianRotationCompensatedParallax(const TrackSet& tracks,
                                         const std::vector<bool>& point_mask,
                                         const Matrix3& R10,
                                         const Matrix3& R12);

}  // namespace tvpose

#include "tvpose/ligt.h"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "tvpose/coplanarity.h"

namespace tvpose {
namespace {

constexpr double kMinRowNorm = 1e-12;
constexpr double kDegeneracyRatio = 1e-8;
constexpr int kMinEffectiveRows = 5;

// Orthonormal basis (9 x 6) of the complement of the common-translation
// directions (v; v; v).
Eigen::Matrix<double, 9, 6> GaugeComplementBasis() {
  Eigen::Matrix<double, 9, 6> Q = Eigen::Matrix<double, 9, 6>::Zero();
  const double a = 1.0 / std::sqrt(2.0);
  const double b = 1.0 / std::sqrt(6.0);
  for (int i = 0; i < 3; ++i) {
    Q(i, 2 * i) = a;
    Q(3 + i, 2 * i) = -a;
    Q(i, 2 * i + 1) = b;
    Q(3 + i, 2 * i + 1) = b;
    Q(6 + i, 2 * i + 1) = -2.0 * b;
  }
  return Q;
}

// Row vector f_a^T [R_ab f_b]x R_aG.
Eigen::RowVector3d EpipolarCoefficient(const Vector3& fa, const Vector3& fb,
                                       const FrameRotations& rot, int a,
                                       int b) {
  return fa.transpose() * Skew(rot.Relative(a, b) * fb) * rot.R_kG[a];
}

// Vote from one line pair: the ray through the segment midpoint in frame a
// meets the back-projected plane of frame b; +1 when the intersection lies
// in front of both cameras, -1 when behind both. Global frame throughout.
int LineCheiralityVote(const LigtSystem::LineCheirality& line,
                       const FrameRotations& rot,
                       const std::array<Vector3, 3>& tG, int a, int b) {
  const Vector3 d = rot.R_kG[a].transpose() * line.midpoint[a];
  const Vector3 g = rot.R_kG[b].transpose() * line.normals.n[b];
  const double denom = g.dot(d);
  if (std::abs(denom) < 1e-6) return 0;
  const double lambda = g.dot(tG[b] - tG[a]) / denom;
  const double depth_b =
      (rot.R_kG[b] * (tG[a] + lambda * d - tG[b])).z();
  if (lambda > 0.0 && depth_b > 0.0) return 1;
  if (lambda < 0.0 && depth_b < 0.0) return -1;
  return 0;
}

}  // namespace

int CheiralityVote(const Vector3& ba, const Vector3& bb, const Matrix3& R_ab,
                   const Vector3& t_ab) {
  Eigen::Matrix<double, 3, 2> A;
  A.col(0) = ba;
  A.col(1) = -(R_ab * bb);
  const Eigen::Matrix2d AtA = A.transpose() * A;
  if (std::abs(AtA.determinant()) < 1e-14) return 0;
  const Eigen::Vector2d depth = AtA.ldlt().solve(A.transpose() * t_ab);
  if (depth[0] > 0.0 && depth[1] > 0.0) return 1;
  if (depth[0] < 0.0 && depth[1] < 0.0) return -1;
  return 0;
}

FrameRotations FrameRotations::FromRelative(const Matrix3& R10,
                                            const Matrix3& R12) {
  FrameRotations out;
  out.R_kG[0] = Matrix3::Identity();
  out.R_kG[1] = R10;
  out.R_kG[2] = R12.transpose() * R10;
  return out;
}

Eigen::MatrixXd LigtRow::Stacked() const {
  Eigen::MatrixXd out(B.rows(), 9);
  out << B, C, D;
  return out;
}

LigtRow PointLigtRows(const PointTrack& track, const FrameRotations& rot,
                      const CameraIntrinsics& K) {
  std::array<Vector3, 3> f;
  for (int k = 0; k < 3; ++k) {
    if (track.Has(k)) f[k] = CalibratedHomogeneous(track.pixels[k], K);
  }
  LigtRow row;
  row.source = LigtRow::Source::kPoint;
  row.feature = track.id;

  std::vector<Eigen::RowVector3d> B, C;
  if (track.IsThreeView()) {
    const Eigen::RowVector3d a01 = EpipolarCoefficient(f[0], f[1], rot, 0, 1);
    const Eigen::RowVector3d a02 = EpipolarCoefficient(f[0], f[2], rot, 0, 2);
    const Eigen::RowVector3d a12 = EpipolarCoefficient(f[1], f[2], rot, 1, 2);
    B = {-a01, -a02, Eigen::RowVector3d::Zero()};
    C = {a01, Eigen::RowVector3d::Zero(), -a12};
  } else if (track.HasPair(0, 1)) {
    const Eigen::RowVector3d a01 = EpipolarCoefficient(f[0], f[1], rot, 0, 1);
    B = {-a01};
    C = {a01};
  } else if (track.HasPair(0, 2)) {
    const Eigen::RowVector3d a02 = EpipolarCoefficient(f[0], f[2], rot, 0, 2);
    B = {-a02};
    C = {Eigen::RowVector3d::Zero()};
  } else if (track.HasPair(1, 2)) {
    const Eigen::RowVector3d a12 = EpipolarCoefficient(f[1], f[2], rot, 1, 2);
    B = {Eigen::RowVector3d::Zero()};
    C = {-a12};
  }
  const int n = static_cast<int>(B.size());
  row.B.resize(n, 3);
  row.C.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    row.B.row(i) = B[i];
    row.C.row(i) = C[i];
  }
  row.D = -(row.B + row.C);
  return row;
}

std::optional<Vector3> LineDirectionEstimate(
    const LineTrack& track, const FrameRotations& rot,
    const LineDirectionOptions& options) {
  const Matrix3 R10 = rot.Relative(1, 0);
  const Matrix3 R12 = rot.Relative(1, 2);
  const CoplanarityMatrix M = NbcMatrix(track.normals, R10, R12);
  if (M.MinEigenvalue() > options.max_min_eigenvalue) return std::nullopt;
  if (M.eigen().values[1] < options.min_mid_eigenvalue) return std::nullopt;
  return CanonicalSign(R10.transpose() * M.MinEigenvector());
}

std::optional<LigtRow> LineLigtRow(const LineTrack& track,
                                   const FrameRotations& rot,
                                   const Vector3& r0_in) {
  const Vector3 r0 = CanonicalSign(r0_in);
  const Vector3& n0 = track.normals.n[0];
  const Vector3& n1 = track.normals.n[1];
  const Vector3& n2 = track.normals.n[2];
  const Vector3 a1 = n0.cross(rot.Relative(0, 1) * n1);
  const Vector3 a2 = n0.cross(rot.Relative(0, 2) * n2);
  const double mag1 = a1.norm();
  const double mag2 = a2.norm();
  if (mag1 < 1e-12 && mag2 < 1e-12) return std::nullopt;
  const double s1 = r0.dot(a1) >= 0.0 ? 1.0 : -1.0;
  const double s2 = r0.dot(a2) >= 0.0 ? 1.0 : -1.0;
  const Eigen::RowVector3d term2 = s1 * mag1 * n2.transpose() * rot.R_kG[2];
  const Eigen::RowVector3d term1 = s2 * mag2 * n1.transpose() * rot.R_kG[1];

  LigtRow row;
  row.source = LigtRow::Source::kLine;
  row.feature = track.id;
  row.B = term2 - term1;
  row.C = term1;
  row.D = -(row.B + row.C);
  return row;
}

Eigen::MatrixXd LigtSystem::Stack(bool normalize) const {
  int total = 0;
  for (const LigtRow& r : rows) total += r.rows();
  Eigen::MatrixXd A(total, 9);
  int out = 0;
  for (const LigtRow& r : rows) {
    const Eigen::MatrixXd block = r.Stacked();
    for (int i = 0; i < block.rows(); ++i) {
      const double norm = block.row(i).norm();
      if (normalize) {
        if (!(norm >= kMinRowNorm)) continue;
        A.row(out++) = block.row(i) / norm;
      } else {
        A.row(out++) = block.row(i);
      }
    }
  }
  A.conservativeResize(out, 9);
  return A;
}

LigtSystem BuildLigtSystem(const TrackSet& tracks,
                           const std::vector<bool>& point_mask,
                           const std::vector<bool>& line_mask,
                           const FrameRotations& rotations,
                           const LigtBuildOptions& options) {
  LigtSystem system;
  system.rotations = rotations;
  for (size_t i = 0; i < tracks.points.size(); ++i) {
    if (!point_mask.empty() && !point_mask[i]) continue;
    const PointTrack& t = tracks.points[i];
    if (options.use_points) {
      LigtRow row = PointLigtRows(t, rotations, tracks.K);
      if (row.rows() > 0) system.rows.push_back(std::move(row));
    }
    // The sign vote uses points even when only line rows are requested.
    system.cheirality_tracks.push_back(t);
  }
  if (options.use_lines) {
    for (size_t i = 0; i < tracks.lines.size(); ++i) {
      if (!line_mask.empty() && !line_mask[i]) continue;
      LigtSystem::LineCheirality vote;
      vote.normals = tracks.lines[i].normals;
      for (int k = 0; k < 3; ++k) {
        const auto& ends = tracks.lines[i].observations[k].endpoints;
        vote.midpoint[k] = CalibratedHomogeneous(
                               {0.5 * (ends[0].u + ends[1].u),
                                0.5 * (ends[0].v + ends[1].v)},
                               tracks.K)
                               .normalized();
      }
      system.cheirality_lines.push_back(vote);
      const auto r0 =
          LineDirectionEstimate(tracks.lines[i], rotations,
                                options.line_direction);
      if (!r0) continue;
      auto row = LineLigtRow(tracks.lines[i], rotations, *r0);
      if (row) system.rows.push_back(std::move(*row));
    }
  }
  return system;
}

TranslationSolution SolveLigt(const LigtSystem& system) {
  TranslationSolution solution;
  const Eigen::MatrixXd A = system.Stack(/*normalize=*/true);
  solution.num_rows = static_cast<int>(A.rows());
  solution.singular_values = Eigen::VectorXd::Zero(9);
  if (A.rows() < kMinEffectiveRows) {
    solution.pure_rotation = true;
    return solution;
  }

  static const Eigen::Matrix<double, 9, 6> Q = GaugeComplementBasis();
  const Eigen::MatrixXd AQ = A * Q;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(AQ, Eigen::ComputeThinV);
  // JacobiSVD sorts descending.
  const Eigen::VectorXd s = svd.singularValues();
  for (int i = 0; i < 6; ++i) solution.singular_values[3 + i] = s[5 - i];
  const double largest = s[0];
  const double fifth_smallest = s[4];
  if (!(largest > 0.0) || fifth_smallest < kDegeneracyRatio * largest) {
    solution.pure_rotation = true;
    return solution;
  }

  const Eigen::Matrix<double, 9, 1> x = Q * svd.matrixV().col(5);
  const Vector3 t0 = x.segment<3>(0);
  Vector3 t1 = x.segment<3>(3) - t0;
  Vector3 t2 = x.segment<3>(6) - t0;
  double scale = t1.norm();
  if (scale < 1e-12 * x.norm()) scale = t2.norm();
  t1 /= scale;
  t2 /= scale;

  const FrameRotations& rot = system.rotations;
  const std::array<Vector3, 3> tG = {Vector3::Zero(), t1, t2};
  int votes = 0;
  for (const PointTrack& track : system.cheirality_tracks) {
    for (const auto& [a, b] : {std::pair{0, 1}, std::pair{1, 2},
                               std::pair{0, 2}}) {
      if (!track.HasPair(a, b)) continue;
      const Vector3 t_ab = rot.R_kG[a] * (tG[b] - tG[a]);
      if (t_ab.norm() < 1e-9) continue;
      votes += CheiralityVote(track.bearings[a], track.bearings[b],
                              rot.Relative(a, b), t_ab);
    }
  }
  for (const LigtSystem::LineCheirality& line : system.cheirality_lines) {
    for (const auto& [a, b] : {std::pair{0, 1}, std::pair{1, 0},
                               std::pair{1, 2}, std::pair{2, 1}}) {
      votes += LineCheiralityVote(line, rot, tG, a, b);
    }
  }
  if (votes < 0) {
    t1 = -t1;
    t2 = -t2;
  }
  solution.t_G = {Vector3::Zero(), t1, t2};
  return solution;
}

RelativeTranslations ComputeRelativeTranslations(
    const TranslationSolution& solution, const FrameRotations& rotations) {
  RelativeTranslations out;
  out.pure_rotation = solution.pure_rotation;
  if (solution.pure_rotation) return out;
  const Vector3 t01 =
      rotations.R_kG[0] * (solution.t_G[1] - solution.t_G[0]);
  const Vector3 t12 =
      rotations.R_kG[1] * (solution.t_G[2] - solution.t_G[1]);
  out.t01 = t01.norm() > 0.0 ? Vector3(t01.normalized()) : t01;
  out.t12 = t12.norm() > 0.0 ? Vector3(t12.normalized()) : t12;
  return out;
}

std::optional<double> MedianRotationCompensatedParallax(const TrackSet& tracks,
                                         const std::vector<bool>& point_mask,
                                         const Matrix3& R10,
                                         const Matrix3& R12) {
  std::vector<double> angles;
  for (size_t i = 0; i < tracks.points.size(); ++i) {
    if (!point_mask.empty() && !point_mask[i]) continue;
    const PointTrack& t = tracks.points[i];
    if (t.HasPair(1, 0)) {
      const Vector3 rb = R10 * t.bearings[0];
      angles.push_back(std::atan2(t.bearings[1].cross(rb).norm(),
                                  t.bearings[1].dot(rb)));
    }
    if (t.HasPair(1, 2)) {
      const Vector3 rb = R12 * t.bearings[2];
      angles.push_back(std::atan2(t.bearings[1].cross(rb).norm(),
                                  t.bearings[1].dot(rb)));
    }
  }
  if (angles.empty()) return std::nullopt;
  const auto mid = angles.begin() + static_cast<long>(angles.size() / 2);
  std::nth_element(angles.begin(), mid, angles.end());
  return *mid;
}

}  // namespace tvpose

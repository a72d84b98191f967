#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tvpose/geometry.h"
#include "tvpose/tracks.h"

namespace tvpose {

enum class SceneMode { kGeneral, kPlanar, kPureRotation };

std::string_view ToString(SceneMode mode);
// Throws std::invalid_argument for unknown names.
SceneMode SceneModeFromString(std::string_view name);

struct ScenarioConfig {
  int n_points = 15;
  int n_lines = 15;
  double noise_std = 0.0;
  double outlier_fraction = 0.0;
  SceneMode mode = SceneMode::kGeneral;
  uint64_t rng_seed = 0;
  // Bound on each Euler angle of the relative rotations (radians).
  double max_euler = 0.5;
  // Landmark distance range from the frame-0 center (z range for planar
  // scenes).
  double min_depth = 4.0;
  double max_depth = 8.0;
  // Relative translation magnitude range between consecutive frames.
  double min_translation = 2.0;
  double max_translation = 2.0;
  double focal = 800.0;
  // Half-width of the frame-0 sampling frustum, as tan of the half angle.
  double fov_tan = 2.5;
  // Landmarks closer than this to any camera's image plane are resampled.
  double min_view_depth = 0.5;
  // Line segments shorter than this in any frame are resampled.
  double min_segment_px = 10.0;
  // Observation std attached to the tracks for uncertainty weighting. Only
  // relative values matter to the weights, so it need not equal noise_std.
  double covariance_sigma_px = 1.0;
  // When set, R10 is this Cayley vector instead of a random draw.
  std::optional<Vector3> fixed_c10;

  CameraIntrinsics Intrinsics() const;
  // Throws std::invalid_argument when an invariant is violated.
  void Validate() const;
};

ScenarioConfig MakePlanar(ScenarioConfig cfg);
ScenarioConfig MakePureRotation(ScenarioConfig cfg);

struct ThreeViewScene {
  ScenarioConfig config;
  Matrix3 R10 = Matrix3::Identity();
  Matrix3 R12 = Matrix3::Identity();
  // Camera centers in the global frame (frame 0): Gt0 = 0.
  std::array<Vector3, 3> t_G = {Vector3::Zero(), Vector3::Zero(),
                                Vector3::Zero()};
  // Landmarks in frame 0 coordinates.
  std::vector<Vector3> points;
  std::vector<std::array<Vector3, 2>> lines;
  // Sampled plane n^T X = offset (planar mode only).
  Vector3 plane_normal = Vector3::UnitZ();
  double plane_offset = 0.0;
  TrackSet tracks;
  std::vector<bool> point_outliers;
  std::vector<bool> line_outliers;

  Matrix3 R_kG(int k) const;
  // 0t1 = R0G (Gt1 - Gt0) and 1t2 = R1G (Gt2 - Gt1), unnormalized.
  Vector3 t01() const;
  Vector3 t12() const;
};

// Samples poses and landmarks, then projects them with i.i.d. Gaussian pixel
// noise on every point and line endpoint. Applies cfg.outlier_fraction via
// InjectOutliers. Throws std::runtime_error when a landmark cannot be placed
// in front of all cameras within 10000 attempts.
ThreeViewScene GenerateScene(const ScenarioConfig& cfg);

// Replaces round(fraction * n) tracks of each type by observations of
// unrelated random landmarks (a fresh one per frame). Inlier tracks are left
// untouched. Throws std::invalid_argument unless 0 <= fraction < 1.
ThreeViewScene InjectOutliers(const ThreeViewScene& scene, double fraction,
                              uint64_t seed);

// Projection of a frame-0 point into frame k, in pixels.
PixelPoint ProjectToFrame(const ThreeViewScene& scene, const Vector3& X0,
                          int k);

}  // namespace tvpose

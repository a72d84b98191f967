#pragma once

#include <array>
#include <optional>
#include <vector>

#include "tvpose/coplanarity.h"
#include "tvpose/geometry.h"

namespace tvpose {

// One point feature observed in two or three of the frames 0, 1, 2.
struct PointTrack {
  int id = 0;
  std::array<bool, 3> observed = {false, false, false};
  std::array<PixelPoint, 3> pixels;
  // Unit bearings; meaningful only where observed.
  std::array<Vector3, 3> bearings;
  // Pixel covariance per observation (pixels^2).
  std::array<Matrix2, 3> pixel_cov = {Matrix2::Identity(), Matrix2::Identity(),
                                      Matrix2::Identity()};

  bool Has(int frame) const { return observed[frame]; }
  bool HasPair(int a, int b) const { return observed[a] && observed[b]; }
  bool IsThreeView() const { return observed[0] && observed[1] && observed[2]; }
  int NumObserved() const;
};

// One line feature observed in all three frames.
struct LineTrack {
  int id = 0;
  std::array<LineObservation, 3> observations;
  // Unit back-projected plane normals, each in its own frame.
  LineNormals normals;
  // Std of the perpendicular endpoint uncertainty (pixels).
  double sigma_line = 1.0;
};

// Throws std::invalid_argument if fewer than two frames are observed.
PointTrack MakePointTrack(int id,
                          const std::array<std::optional<PixelPoint>, 3>& pixels,
                          const CameraIntrinsics& K, double sigma_px);

// Throws std::invalid_argument for degenerate segments.
LineTrack MakeLineTrack(
    int id, const std::array<std::array<PixelPoint, 2>, 3>& endpoints,
    const CameraIntrinsics& K, double sigma_line);

// Features handed to the solvers.
struct TrackSet {
  CameraIntrinsics K;
  std::vector<PointTrack> points;
  std::vector<LineTrack> lines;
};

}  // namespace tvpose

#include "tvpose/tracks.h"

#include <stdexcept>

namespace tvpose {

int PointTrack::NumObserved() const {
  return static_cast<int>(observed[0]) + static_cast<int>(observed[1]) +
         static_cast<int>(observed[2]);
}

PointTrack MakePointTrack(int id,
                          const std::array<std::optional<PixelPoint>, 3>& pixels,
                          const CameraIntrinsics& K, double sigma_px) {
  PointTrack track;
  track.id = id;
  const Matrix2 cov = sigma_px * sigma_px * Matrix2::Identity();
  for (int k = 0; k < 3; ++k) {
    if (!pixels[k]) continue;
    track.observed[k] = true;
    track.pixels[k] = *pixels[k];
    track.bearings[k] = BearingFromPixel(*pixels[k], K);
    track.pixel_cov[k] = cov;
  }
  if (track.NumObserved() < 2) {
    throw std::invalid_argument("MakePointTrack: fewer than two observations");
  }
  return track;
}

LineTrack MakeLineTrack(
    int id, const std::array<std::array<PixelPoint, 2>, 3>& endpoints,
    const CameraIntrinsics& K, double sigma_line) {
  LineTrack track;
  track.id = id;
  track.sigma_line = sigma_line;
  for (int k = 0; k < 3; ++k) {
    track.observations[k] = LineFromEndpoints(endpoints[k][0], endpoints[k][1]);
    track.normals.n[k] = BackprojectedNormal(track.observations[k], K, k).n;
  }
  return track;
}

}  // namespace tvpose

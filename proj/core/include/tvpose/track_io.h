#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tvpose/scene.h"
#include "tvpose/tracks.h"

namespace tvpose {

// Plain-text track format, one record per line:
//
//   tvp/1
//   K fx fy cx cy
//   P id u0 v0 u1 v1 u2 v2
//   L id x0a y0a x0b y0b x1a y1a x1b y1b x2a y2a x2b y2b
//
// Blank lines and lines starting with '#' are ignored. A frame in which a
// point is not observed is written as "nan nan".

struct IngestOptions {
  // Throw on the first malformed record instead of skipping it.
  bool strict = false;
  // Observation std (pixels) attached to every ingested feature.
  double sigma_px = 1.0;
};

struct IngestWarning {
  int line_number = 0;
  std::string message;
};

struct IngestResult {
  TrackSet tracks;
  std::vector<IngestWarning> warnings;
};

// Throws std::runtime_error (with the line number) for a missing or bad
// header or intrinsics line, and in strict mode for any bad record.
// Otherwise malformed records and points seen in fewer than two frames are
// skipped and reported as warnings. An empty input yields no tracks.
IngestResult ReadTracks(std::istream& in, const IngestOptions& options = {});
IngestResult ReadTrackFile(const std::string& path,
                           const IngestOptions& options = {});

// Writes with 17 significant digits so that reading back is exact.
void WriteTracks(std::ostream& out, const TrackSet& tracks);
void WriteTrackFile(const std::string& path, const TrackSet& tracks);

// Ground truth of a synthetic scene as a JSON document.
std::string GroundTruthJson(const ThreeViewScene& scene);

struct GroundTruth {
  Matrix3 R10 = Matrix3::Identity();
  Matrix3 R12 = Matrix3::Identity();
  std::array<Vector3, 3> t_G = {Vector3::Zero(), Vector3::Zero(),
                                Vector3::Zero()};
  std::vector<bool> point_outliers;
  std::vector<bool> line_outliers;

  // 0t1 and 1t2.
  Vector3 t01() const;
  Vector3 t12() const;
};

// Throws std::runtime_error on malformed documents.
GroundTruth ParseGroundTruthJson(const std::string& text);

}  // namespace tvpose

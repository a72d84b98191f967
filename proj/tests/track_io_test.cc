#include "tvpose/track_io.h"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.h"
#include "tvpose/pipeline.h"

namespace tvpose {
namespace {

// 50 points and 50 lines; record 37 (file line 40) is a point with a
// non-numeric coordinate.
std::string FixtureWithOneMalformedRecord() {
  const ThreeViewScene scene = testing::NoiselessScene(7, 50, 50);
  std::ostringstream clean;
  WriteTracks(clean, scene.tracks);
  std::istringstream in(clean.str());
  std::ostringstream out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (number == 40) {
      line = "P 37 1.0 2.0 abc 4.0 5.0 6.0";
    }
    out << line << '\n';
  }
  return out.str();
}

TEST(TrackIo, LenientIngestSkipsMalformedRecord) {
  std::istringstream in(FixtureWithOneMalformedRecord());
  const IngestResult result = ReadTracks(in);
  EXPECT_EQ(result.tracks.points.size(), 49u);
  EXPECT_EQ(result.tracks.lines.size(), 50u);
  ASSERT_EQ(result.warnings.size(), 1u);
  EXPECT_EQ(result.warnings[0].line_number, 40);
  EXPECT_NE(result.warnings[0].message.find("abc"), std::string::npos);
}

TEST(TrackIo, StrictIngestThrowsWithLineNumber) {
  std::istringstream in(FixtureWithOneMalformedRecord());
  IngestOptions options;
  options.strict = true;
  try {
    ReadTracks(in, options);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 40"), std::string::npos);
  }
}

TEST(TrackIo, RoundTripIsExact) {
  ScenarioConfig cfg;
  cfg.noise_std = 1.0;
  cfg.rng_seed = 3;
  const ThreeViewScene scene = GenerateScene(cfg);
  std::ostringstream out;
  WriteTracks(out, scene.tracks);
  std::istringstream in(out.str());
  const IngestResult back = ReadTracks(in);
  EXPECT_TRUE(back.warnings.empty());
  ASSERT_EQ(back.tracks.points.size(), scene.tracks.points.size());
  ASSERT_EQ(back.tracks.lines.size(), scene.tracks.lines.size());
  EXPECT_EQ(back.tracks.K.fx, scene.tracks.K.fx);
  for (size_t j = 0; j < back.tracks.points.size(); ++j) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(back.tracks.points[j].pixels[k].u,
                scene.tracks.points[j].pixels[k].u);
      EXPECT_EQ(back.tracks.points[j].bearings[k],
                scene.tracks.points[j].bearings[k]);
    }
  }
  for (size_t j = 0; j < back.tracks.lines.size(); ++j) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(back.tracks.lines[j].normals.n[k],
                scene.tracks.lines[j].normals.n[k]);
    }
  }
  std::ostringstream again;
  WriteTracks(again, back.tracks);
  EXPECT_EQ(again.str(), out.str());
}

TEST(TrackIo, TwoViewPointsUseNan) {
  const CameraIntrinsics K;
  TrackSet tracks;
  tracks.K = K;
  tracks.points.push_back(
      MakePointTrack(4, {PixelPoint{1.0, 2.0}, std::nullopt, PixelPoint{3.0, 4.0}},
                     K, 1.0));
  std::ostringstream out;
  WriteTracks(out, tracks);
  EXPECT_NE(out.str().find("P 4 1 2 nan nan 3 4"), std::string::npos);
  std::istringstream in(out.str());
  const IngestResult back = ReadTracks(in);
  ASSERT_EQ(back.tracks.points.size(), 1u);
  EXPECT_FALSE(back.tracks.points[0].Has(1));
  EXPECT_TRUE(back.tracks.points[0].HasPair(0, 2));
}

TEST(TrackIo, SingleViewPointIsWarning) {
  std::istringstream in("tvp/1\nK 800 800 0 0\nP 1 1 2 nan nan nan nan\n");
  const IngestResult result = ReadTracks(in);
  EXPECT_TRUE(result.tracks.points.empty());
  ASSERT_EQ(result.warnings.size(), 1u);
  EXPECT_EQ(result.warnings[0].line_number, 3);
}

TEST(TrackIo, HeaderErrorsAreFatal) {
  {
    std::istringstream in("tvp/2\nK 800 800 0 0\n");
    EXPECT_THROW(ReadTracks(in), std::runtime_error);
  }
  {
    std::istringstream in("tvp/1\nP 1 1 2 3 4 5 6\n");
    EXPECT_THROW(ReadTracks(in), std::runtime_error);
  }
  {
    std::istringstream in("tvp/1\nK -1 800 0 0\n");
    EXPECT_THROW(ReadTracks(in), std::runtime_error);
  }
  {
    std::istringstream in("tvp/1\n");
    EXPECT_THROW(ReadTracks(in), std::runtime_error);
  }
  std::istringstream empty("");
  EXPECT_TRUE(ReadTracks(empty).tracks.points.empty());
  EXPECT_THROW(ReadTrackFile("/nonexistent/tracks.tvp"), std::runtime_error);
}

TEST(TrackIo, CommentsAndUnknownRecords) {
  std::istringstream in(
      "# comment\n\ntvp/1\nK 800 800 0 0\n# note\nX 1 2\n"
      "P 1 1 2 3 4 5 6\nL 2 0 0 50 0 0 0 50 0 0 0 50\n");
  const IngestResult result = ReadTracks(in);
  EXPECT_EQ(result.tracks.points.size(), 1u);
  EXPECT_EQ(result.tracks.lines.size(), 0u);
  ASSERT_EQ(result.warnings.size(), 2u);
  EXPECT_EQ(result.warnings[0].line_number, 6);
  EXPECT_EQ(result.warnings[1].line_number, 8);
}

TEST(TrackIo, GroundTruthJsonRoundTrip) {
  ScenarioConfig cfg;
  cfg.outlier_fraction = 0.2;
  cfg.rng_seed = 9;
  const ThreeViewScene scene = GenerateScene(cfg);
  const GroundTruth gt = ParseGroundTruthJson(GroundTruthJson(scene));
  EXPECT_EQ(gt.R10, scene.R10);
  EXPECT_EQ(gt.R12, scene.R12);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(gt.t_G[k], scene.t_G[k]);
  EXPECT_EQ(gt.point_outliers, scene.point_outliers);
  EXPECT_EQ(gt.line_outliers, scene.line_outliers);
  EXPECT_EQ(gt.t01(), scene.t01());
  EXPECT_EQ(gt.t12(), scene.t12());
  EXPECT_THROW(ParseGroundTruthJson("{\"R10\": 3}"), std::runtime_error);
}

TEST(TrackIo, RoundTripGivesIdenticalSolverOutput) {
  ScenarioConfig cfg;
  cfg.n_points = 40;
  cfg.n_lines = 40;
  cfg.noise_std = 1.0;
  cfg.outlier_fraction = 0.1;
  cfg.rng_seed = 21;
  const ThreeViewScene scene = GenerateScene(cfg);
  std::stringstream buffer;
  WriteTracks(buffer, scene.tracks);
  const IngestResult read = ReadTracks(buffer, {});
  ASSERT_TRUE(read.warnings.empty());
  PipelineConfig config;
  config.ransac.rng_seed = 3;
  const PoseEstimate a = EstimateThreeViewPose(scene.tracks, config);
  const PoseEstimate b = EstimateThreeViewPose(read.tracks, config);
  ASSERT_TRUE(a.success && b.success);
  EXPECT_EQ(a.rotations.c10, b.rotations.c10);
  EXPECT_EQ(a.rotations.c12, b.rotations.c12);
  EXPECT_EQ(a.relative.t01, b.relative.t01);
  EXPECT_EQ(a.relative.t12, b.relative.t12);
  EXPECT_EQ(a.inliers.points, b.inliers.points);
  EXPECT_EQ(a.inliers.lines, b.inliers.lines);
}

}  // namespace
}  // namespace tvpose

#include "tvpose/scene.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "tvpose/random.h"

namespace tvpose {
namespace {

constexpr int kMaxAttempts = 10000;

enum Stream : uint64_t {
  kPoseStream = 1,
  kPlaneStream,
  kPointStream,
  kLineStream,
  kPointNoiseStream,
  kLineNoiseStream,
  kOutlierSelectStream,
  kOutlierPointStream,
  kOutlierLineStream,
};

Vector3 ToFrame(const ThreeViewScene& scene, const Vector3& X0, int k) {
  return scene.R_kG(k) * (X0 - scene.t_G[k]);
}

bool InFrontOfAll(const ThreeViewScene& scene, const Vector3& X0) {
  for (int k = 0; k < 3; ++k) {
    if (ToFrame(scene, X0, k).z() < scene.config.min_view_depth) return false;
  }
  return true;
}

// A landmark inside the frame-0 frustum. Free landmarks lie at a distance
// from the frame-0 center in the configured range. Plane landmarks use the
// range as a bound on z instead, since a plane meets the distance shell only
// in a narrow band.
std::optional<Vector3> SampleLandmark(const ThreeViewScene& scene,
                                      RandomStream* rng, bool on_plane) {
  const ScenarioConfig& cfg = scene.config;
  const double x = rng->Uniform(-cfg.fov_tan, cfg.fov_tan);
  const double y = rng->Uniform(-cfg.fov_tan, cfg.fov_tan);
  const Vector3 ray(x, y, 1.0);
  Vector3 X;
  if (on_plane) {
    const double denom = scene.plane_normal.dot(ray);
    if (std::abs(denom) < 1e-9) return std::nullopt;
    const double z = scene.plane_offset / denom;
    if (z < cfg.min_depth || z > cfg.max_depth) return std::nullopt;
    X = z * ray;
  } else {
    X = rng->Uniform(cfg.min_depth, cfg.max_depth) * ray.normalized();
  }
  if (!InFrontOfAll(scene, X)) return std::nullopt;
  return X;
}

[[noreturn]] void ThrowPlacementFailure(const char* what, int index) {
  throw std::runtime_error(std::string("GenerateScene: could not place ") +
                           what + " " + std::to_string(index) +
                           " in front of all cameras after " +
                           std::to_string(kMaxAttempts) + " attempts");
}

Vector3 PlacePoint(const ThreeViewScene& scene, RandomStream* rng,
                   bool on_plane, int index) {
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    if (auto X = SampleLandmark(scene, rng, on_plane)) return *X;
  }
  ThrowPlacementFailure("point", index);
}

bool SegmentVisible(const ThreeViewScene& scene, const Vector3& A,
                    const Vector3& B) {
  for (int k = 0; k < 3; ++k) {
    const PixelPoint a = ProjectToFrame(scene, A, k);
    const PixelPoint b = ProjectToFrame(scene, B, k);
    if (std::hypot(a.u - b.u, a.v - b.v) < scene.config.min_segment_px) {
      return false;
    }
  }
  return true;
}

std::array<Vector3, 2> PlaceLine(const ThreeViewScene& scene,
                                 RandomStream* rng, bool on_plane,
                                 int index) {
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const auto A = SampleLandmark(scene, rng, on_plane);
    if (!A) continue;
    const auto B = SampleLandmark(scene, rng, on_plane);
    if (!B) continue;
    if (SegmentVisible(scene, *A, *B)) return {*A, *B};
  }
  ThrowPlacementFailure("line", index);
}

PixelPoint AddNoise(const PixelPoint& p, double sigma, RandomStream* rng) {
  PixelPoint q = p;
  q.u += rng->Normal(sigma);
  q.v += rng->Normal(sigma);
  return q;
}

PointTrack ObservePoint(const ThreeViewScene& scene, int id,
                        const std::array<Vector3, 3>& landmarks,
                        RandomStream* noise) {
  std::array<std::optional<PixelPoint>, 3> pixels;
  for (int k = 0; k < 3; ++k) {
    pixels[k] = AddNoise(ProjectToFrame(scene, landmarks[k], k),
                         scene.config.noise_std, noise);
  }
  return MakePointTrack(id, pixels, scene.tracks.K,
                        scene.config.covariance_sigma_px);
}

LineTrack ObserveLine(const ThreeViewScene& scene, int id,
                      const std::array<std::array<Vector3, 2>, 3>& segments,
                      RandomStream* noise) {
  std::array<std::array<PixelPoint, 2>, 3> endpoints;
  for (int k = 0; k < 3; ++k) {
    for (int e = 0; e < 2; ++e) {
      endpoints[k][e] = AddNoise(ProjectToFrame(scene, segments[k][e], k),
                                 scene.config.noise_std, noise);
    }
  }
  return MakeLineTrack(id, endpoints, scene.tracks.K,
                       scene.config.covariance_sigma_px);
}

}  // namespace

std::string_view ToString(SceneMode mode) {
  switch (mode) {
    case SceneMode::kGeneral:
      return "general";
    case SceneMode::kPlanar:
      return "planar";
    case SceneMode::kPureRotation:
      return "pure_rotation";
  }
  return "unknown";
}

SceneMode SceneModeFromString(std::string_view name) {
  if (name == "general") return SceneMode::kGeneral;
  if (name == "planar") return SceneMode::kPlanar;
  if (name == "pure_rotation") return SceneMode::kPureRotation;
  throw std::invalid_argument("unknown scene mode: " + std::string(name));
}

CameraIntrinsics ScenarioConfig::Intrinsics() const {
  CameraIntrinsics K;
  K.fx = focal;
  K.fy = focal;
  return K;
}

void ScenarioConfig::Validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("ScenarioConfig: ") + msg);
  };
  require(n_points >= 0 && n_lines >= 0, "counts must be >= 0");
  require(noise_std >= 0.0 && std::isfinite(noise_std), "noise_std must be >= 0");
  require(outlier_fraction >= 0.0 && outlier_fraction < 1.0,
          "outlier_fraction must be in [0, 1)");
  require(max_euler >= 0.0, "max_euler must be >= 0");
  require(min_depth > 0.0 && max_depth >= min_depth, "invalid depth range");
  require(min_translation >= 0.0 && max_translation >= min_translation,
          "invalid translation range");
  require(focal > 0.0, "focal must be > 0");
  require(fov_tan > 0.0, "fov_tan must be > 0");
  require(min_view_depth > 0.0, "min_view_depth must be > 0");
  require(min_segment_px > 0.0, "min_segment_px must be > 0");
  require(covariance_sigma_px >= 0.0, "covariance_sigma_px must be >= 0");
}

ScenarioConfig MakePlanar(ScenarioConfig cfg) {
  cfg.mode = SceneMode::kPlanar;
  return cfg;
}

ScenarioConfig MakePureRotation(ScenarioConfig cfg) {
  cfg.mode = SceneMode::kPureRotation;
  return cfg;
}

Matrix3 ThreeViewScene::R_kG(int k) const {
  if (k == 0) return Matrix3::Identity();
  if (k == 1) return R10;
  return R12.transpose() * R10;
}

Vector3 ThreeViewScene::t01() const { return t_G[1] - t_G[0]; }

Vector3 ThreeViewScene::t12() const { return R10 * (t_G[2] - t_G[1]); }

PixelPoint ProjectToFrame(const ThreeViewScene& scene, const Vector3& X0,
                          int k) {
  const Vector3 Xk = ToFrame(scene, X0, k);
  const CameraIntrinsics& K = scene.tracks.K;
  return {K.fx * Xk.x() / Xk.z() + K.cx, K.fy * Xk.y() / Xk.z() + K.cy};
}

ThreeViewScene GenerateScene(const ScenarioConfig& cfg) {
  cfg.Validate();
  ThreeViewScene scene;
  scene.config = cfg;
  scene.tracks.K = cfg.Intrinsics();

  RandomStream pose(cfg.rng_seed, kPoseStream);
  auto euler = [&]() {
    const double roll = pose.Uniform(-cfg.max_euler, cfg.max_euler);
    const double pitch = pose.Uniform(-cfg.max_euler, cfg.max_euler);
    const double yaw = pose.Uniform(-cfg.max_euler, cfg.max_euler);
    return RotationFromEuler(roll, pitch, yaw);
  };
  const Matrix3 R1G = euler();
  const Matrix3 R21 = euler();
  scene.R10 = cfg.fixed_c10 ? CayleyToRotation(*cfg.fixed_c10) : R1G;
  scene.R12 = R21.transpose();
  const Vector3 tau1 =
      pose.UnitVector() * pose.Uniform(cfg.min_translation, cfg.max_translation);
  const Vector3 tau2 =
      pose.UnitVector() * pose.Uniform(cfg.min_translation, cfg.max_translation);
  if (cfg.mode != SceneMode::kPureRotation) {
    scene.t_G[1] = tau1;
    scene.t_G[2] = tau1 + tau2;
  }

  const bool planar = cfg.mode == SceneMode::kPlanar;
  if (planar) {
    // A plane through a point on the optical axis at mid depth, tilted by
    // at most 45 degrees from fronto-parallel.
    RandomStream plane(cfg.rng_seed, kPlaneStream);
    const double azimuth = plane.Uniform(0.0, 2.0 * M_PI);
    const double tilt = plane.Uniform(0.0, M_PI / 4.0);
    const Vector3 axis(std::cos(azimuth), std::sin(azimuth), 0.0);
    scene.plane_normal = RotationFromAxisAngle(tilt * axis) * Vector3::UnitZ();
    const Vector3 anchor(0.0, 0.0, 0.5 * (cfg.min_depth + cfg.max_depth));
    scene.plane_offset = scene.plane_normal.dot(anchor);
  }

  scene.points.reserve(cfg.n_points);
  scene.tracks.points.reserve(cfg.n_points);
  for (int j = 0; j < cfg.n_points; ++j) {
    RandomStream geom(cfg.rng_seed, kPointStream, j);
    RandomStream noise(cfg.rng_seed, kPointNoiseStream, j);
    const Vector3 X = PlacePoint(scene, &geom, planar, j);
    scene.points.push_back(X);
    scene.tracks.points.push_back(ObservePoint(scene, j, {X, X, X}, &noise));
  }
  scene.lines.reserve(cfg.n_lines);
  scene.tracks.lines.reserve(cfg.n_lines);
  for (int j = 0; j < cfg.n_lines; ++j) {
    RandomStream geom(cfg.rng_seed, kLineStream, j);
    RandomStream noise(cfg.rng_seed, kLineNoiseStream, j);
    const std::array<Vector3, 2> seg = PlaceLine(scene, &geom, planar, j);
    scene.lines.push_back(seg);
    scene.tracks.lines.push_back(ObserveLine(scene, j, {seg, seg, seg}, &noise));
  }
  scene.point_outliers.assign(cfg.n_points, false);
  scene.line_outliers.assign(cfg.n_lines, false);

  if (cfg.outlier_fraction > 0.0) {
    return InjectOutliers(scene, cfg.outlier_fraction, cfg.rng_seed);
  }
  return scene;
}

ThreeViewScene InjectOutliers(const ThreeViewScene& scene, double fraction,
                              uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("InjectOutliers: fraction must be in [0, 1)");
  }
  ThreeViewScene out = scene;
  out.config.outlier_fraction = fraction;
  out.point_outliers.assign(scene.tracks.points.size(), false);
  out.line_outliers.assign(scene.tracks.lines.size(), false);

  auto choose = [&](size_t n, uint64_t type) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    RandomStream rng(seed, kOutlierSelectStream, type);
    std::shuffle(order.begin(), order.end(), rng.engine());
    order.resize(static_cast<size_t>(std::lround(fraction * n)));
    std::sort(order.begin(), order.end());
    return order;
  };

  for (int j : choose(scene.tracks.points.size(), 0)) {
    RandomStream rng(seed, kOutlierPointStream, j);
    std::array<Vector3, 3> landmarks;
    for (int k = 0; k < 3; ++k) landmarks[k] = PlacePoint(out, &rng, false, j);
    PointTrack& track = out.tracks.points[j];
    track = ObservePoint(out, track.id, landmarks, &rng);
    out.point_outliers[j] = true;
  }
  for (int j : choose(scene.tracks.lines.size(), 1)) {
    RandomStream rng(seed, kOutlierLineStream, j);
    std::array<std::array<Vector3, 2>, 3> segments;
    for (int k = 0; k < 3; ++k) segments[k] = PlaceLine(out, &rng, false, j);
    LineTrack& track = out.tracks.lines[j];
    track = ObserveLine(out, track.id, segments, &rng);
    out.line_outliers[j] = true;
  }
  return out;
}

}  // namespace tvpose

#include "tvpose/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tvpose/random.h"
#include "tvpose/uncertainty.h"

namespace tvpose {
namespace {

constexpr uint64_t kRansacPointStream = 101;
constexpr uint64_t kRansacLineStream = 102;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ElapsedMs() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

Vector3 NecDirection(const std::vector<PointPairTerm>& terms,
                     const Matrix3& R) {
  std::vector<Vector3> normals;
  normals.reserve(terms.size());
  for (const PointPairTerm& t : terms) normals.push_back(t.b1.cross(R * t.bk));
  const CoplanarityMatrix M = CoplanarityMatrix::FromNormals(normals);
  if (M.num_terms() == 0) return Vector3::UnitZ();
  return M.MinEigenvector();
}

std::array<Vector3, 2> NecDirections(const RotationProblem& problem,
                                     const RotationPair& state) {
  return {NecDirection(problem.pairs10, state.R10()),
          NecDirection(problem.pairs12, state.R12())};
}

// Points of `inliers` observed in frames 1 and k that triangulate in front of
// both cameras, for the better of the two translation signs.
int FrontCount(const TrackSet& tracks, const std::vector<bool>& inliers,
               int k, const Matrix3& R1k, const Vector3& t) {
  int plus = 0, minus = 0;
  for (size_t i = 0; i < tracks.points.size(); ++i) {
    const PointTrack& p = tracks.points[i];
    if (!inliers[i] || !p.HasPair(1, k)) continue;
    const int vote = CheiralityVote(p.bearings[1], p.bearings[k], R1k, t);
    if (vote > 0) ++plus;
    if (vote < 0) ++minus;
  }
  return std::max(plus, minus);
}

// R1k and its twist, the rotation by pi about t composed with R1k, have
// identical epipolar residuals. Keeps whichever places more points in front
// of both cameras.
Matrix3 ResolveTwistedPair(const TrackSet& tracks,
                           const std::vector<bool>& inliers, int k,
                           const Matrix3& R1k, const Vector3& t) {
  const Matrix3 twisted =
      (2.0 * t * t.transpose() - Matrix3::Identity()) * R1k;
  return FrontCount(tracks, inliers, k, twisted, t) >
                 FrontCount(tracks, inliers, k, R1k, t)
             ? twisted
             : R1k;
}

int CountTrue(const std::vector<bool>& v) {
  return static_cast<int>(std::count(v.begin(), v.end(), true));
}

// Minimum number of iterations for the given inlier ratio and confidence.
int RequiredIterations(double inlier_ratio, int sample_size, double confidence,
                       int max_iterations) {
  const double p_good = std::pow(inlier_ratio, sample_size);
  if (p_good >= 1.0) return 1;
  if (p_good <= 0.0) return max_iterations;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (!std::isfinite(n) || n >= max_iterations) return max_iterations;
  return std::max(1, static_cast<int>(std::ceil(n)));
}

std::vector<bool> SampleMask(int n, int k, RandomStream* rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<bool> mask(n, false);
  for (int i = 0; i < k; ++i) {
    const int j = rng->UniformInt(i, n - 1);
    std::swap(idx[i], idx[j]);
    mask[idx[i]] = true;
  }
  return mask;
}

LigtBuildOptions LigtOptionsFor(const PipelineConfig& config) {
  const VariantTraits traits = TraitsOf(config.variant);
  LigtBuildOptions options = config.irls.ligt;
  options.use_points = traits.use_points;
  options.use_lines = traits.use_lines;
  return options;
}

// IRLS or a single unweighted LM solve, depending on the variant.
void RefineRotations(const TrackSet& tracks, RotationProblem problem,
                     const std::vector<bool>& point_mask,
                     const std::vector<bool>& line_mask,
                     const RotationPair& initial, const PipelineConfig& config,
                     PoseEstimate* pose) {
  if (TraitsOf(config.variant).reweight) {
    IrlsOptions irls = config.irls;
    irls.ligt = LigtOptionsFor(config);
    const IrlsResult result = IrlsSolve(tracks, std::move(problem), point_mask,
                                        line_mask, initial, irls);
    pose->rotations = result.rotations;
    pose->first_failed_loop = result.first_failed_loop;
    pose->rotation_converged = result.converged();
    for (const LmReport& r : result.loop_reports) {
      pose->lm_iterations += r.iterations;
    }
    pose->final_cost = result.loop_reports.back().final_cost;
  } else {
    const RotationSolveResult result =
        LmMinimize(problem, initial, config.irls.lm);
    pose->rotations = result.rotations;
    pose->rotation_converged = result.report.converged();
    pose->first_failed_loop = pose->rotation_converged ? -1 : 0;
    pose->lm_iterations += result.report.iterations;
    pose->final_cost = result.report.final_cost;
  }
}

std::array<Vector3, 2> DirectionsForClassification(
    const PoseEstimate& pose, const TrackSet& tracks,
    const std::vector<bool>& point_mask) {
  if (!pose.translation.pure_rotation) {
    const FrameRotations rot = FrameRotations::FromRelative(
        pose.rotations.R10(), pose.rotations.R12());
    const auto& tG = pose.translation.t_G;
    const Vector3 t10 = rot.R_kG[1] * (tG[0] - tG[1]);
    const Vector3 t12 = rot.R_kG[1] * (tG[2] - tG[1]);
    if (t10.norm() > 1e-12 && t12.norm() > 1e-12) {
      return {t10.normalized(), t12.normalized()};
    }
  }
  const RotationProblem problem = BuildRotationProblem(
      tracks, point_mask, {}, true, false, LineResidualForm::kMult);
  return NecDirections(problem, pose.rotations);
}

}  // namespace

VariantTraits TraitsOf(SolverVariant variant) {
  switch (variant) {
    case SolverVariant::kRt2pl:
      return {true, true, true};
    case SolverVariant::kPnec:
      return {true, false, true};
    case SolverVariant::kNec:
      return {true, false, false};
    case SolverVariant::kNbc:
      return {false, true, false};
    case SolverVariant::kPnbc:
      return {false, true, true};
  }
  return {};
}

std::string_view ToString(SolverVariant variant) {
  switch (variant) {
    case SolverVariant::kRt2pl:
      return "rt2pl";
    case SolverVariant::kPnec:
      return "pnec";
    case SolverVariant::kNec:
      return "nec";
    case SolverVariant::kNbc:
      return "nbc";
    case SolverVariant::kPnbc:
      return "pnbc";
  }
  return "unknown";
}

SolverVariant SolverVariantFromString(std::string_view name) {
  for (SolverVariant v : AllSolverVariants()) {
    if (ToString(v) == name) return v;
  }
  throw std::invalid_argument("unknown solver variant: " + std::string(name));
}

std::vector<SolverVariant> AllSolverVariants() {
  return {SolverVariant::kRt2pl, SolverVariant::kPnec, SolverVariant::kNec,
          SolverVariant::kNbc, SolverVariant::kPnbc};
}

int InlierMasks::NumPointInliers() const { return CountTrue(points); }
int InlierMasks::NumLineInliers() const { return CountTrue(lines); }

double PointInlierResidual(const PointTrack& track, const Matrix3& R10,
                           const Matrix3& R12,
                           const std::array<Vector3, 2>& t_dirs) {
  double worst = 0.0;
  if (track.HasPair(1, 0)) {
    const Vector3 n = track.bearings[1].cross(R10 * track.bearings[0]);
    worst = std::max(worst, std::abs(t_dirs[0].dot(n)));
  }
  if (track.HasPair(1, 2)) {
    const Vector3 n = track.bearings[1].cross(R12 * track.bearings[2]);
    worst = std::max(worst, std::abs(t_dirs[1].dot(n)));
  }
  return worst;
}

double LineInlierResidual(const LineTrack& track, const Matrix3& R10,
                          const Matrix3& R12) {
  return NbcMultResidual(NormalsInFrame1(track.normals, R10, R12));
}

InlierMasks ClassifyInliers(const TrackSet& tracks, const RotationPair& state,
                            const std::array<Vector3, 2>& t_dirs,
                            const InlierThresholds& thresholds) {
  const Matrix3 R10 = state.R10();
  const Matrix3 R12 = state.R12();
  const std::array<Vector3, 2> t = {t_dirs[0].normalized(),
                                    t_dirs[1].normalized()};
  InlierMasks masks;
  masks.points.resize(tracks.points.size());
  masks.lines.resize(tracks.lines.size());
  for (size_t i = 0; i < tracks.points.size(); ++i) {
    masks.points[i] =
        PointInlierResidual(tracks.points[i], R10, R12, t) < thresholds.point;
  }
  for (size_t i = 0; i < tracks.lines.size(); ++i) {
    masks.lines[i] =
        LineInlierResidual(tracks.lines[i], R10, R12) < thresholds.line;
  }
  return masks;
}

double NormalizedPointResidual(const PointTrack& track, const Matrix3& R10,
                               const Matrix3& R12,
                               const std::array<Vector3, 2>& t_dirs,
                               const CameraIntrinsics& K) {
  double worst = 0.0;
  const std::array<int, 2> frames = {0, 2};
  const std::array<Matrix3, 2> R1k = {R10, R12};
  for (int p = 0; p < 2; ++p) {
    const int k = frames[p];
    if (!track.HasPair(1, k)) continue;
    const Vector3 n = track.bearings[1].cross(R1k[p] * track.bearings[k]);
    const double variance =
        PointWeight(track, 1, k, R1k[p], t_dirs[p], K).variance;
    if (!(variance > 0.0)) continue;
    worst = std::max(worst, std::abs(t_dirs[p].dot(n)) / std::sqrt(variance));
  }
  return worst;
}

double NormalizedLineResidual(const LineTrack& track, const Matrix3& R10,
                              const Matrix3& R12, const CameraIntrinsics& K) {
  const double variance =
      LineWeight(track.normals, R10, R12, LineNormalCovariances(track, K))
          .variance;
  if (!(variance > 0.0)) return 0.0;
  return LineInlierResidual(track, R10, R12) / std::sqrt(variance);
}

InlierMasks GateNormalizedResiduals(const TrackSet& tracks,
                                    const RotationPair& state,
                                    const std::array<Vector3, 2>& t_dirs,
                                    const InlierMasks& masks,
                                    double gate_sigmas) {
  constexpr int kMinForScale = 5;
  const Matrix3 R10 = state.R10();
  const Matrix3 R12 = state.R12();
  const std::array<Vector3, 2> t = {t_dirs[0].normalized(),
                                    t_dirs[1].normalized()};
  // Residuals are only known up to a common scale per kind; the median
  // absolute normalized residual of the current inliers estimates it.
  // Residuals at rounding level are never gated.
  constexpr double kRoundingFloor = 1e-9;
  auto gate = [&](std::vector<bool> mask, auto&& raw, auto&& normalized) {
    std::vector<double> z(mask.size(), 0.0);
    std::vector<double> inlier_z;
    for (size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) continue;
      z[i] = normalized(i);
      inlier_z.push_back(z[i]);
    }
    if (static_cast<int>(inlier_z.size()) < kMinForScale) return mask;
    const auto mid = inlier_z.begin() + inlier_z.size() / 2;
    std::nth_element(inlier_z.begin(), mid, inlier_z.end());
    const double sigma = 1.4826 * *mid;
    if (!(sigma > 0.0)) return mask;
    for (size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] && z[i] > gate_sigmas * sigma && raw(i) > kRoundingFloor) {
        mask[i] = false;
      }
    }
    return mask;
  };
  InlierMasks out;
  out.points = gate(
      masks.points,
      [&](size_t i) {
        return PointInlierResidual(tracks.points[i], R10, R12, t);
      },
      [&](size_t i) {
        return NormalizedPointResidual(tracks.points[i], R10, R12, t,
                                       tracks.K);
      });
  out.lines = gate(
      masks.lines,
      [&](size_t i) { return LineInlierResidual(tracks.lines[i], R10, R12); },
      [&](size_t i) {
        return NormalizedLineResidual(tracks.lines[i], R10, R12, tracks.K);
      });
  return out;
}

RansacResult RansacRotation(const TrackSet& tracks, FeatureKind kind,
                            const RansacConfig& config,
                            LineResidualForm form) {
  RansacResult result;
  const bool points = kind == FeatureKind::kPoints;
  const int n = static_cast<int>(points ? tracks.points.size()
                                        : tracks.lines.size());
  const int s = config.sample_size;
  if (s < 1 || n < s) {
    result.failure_reason = "not enough features for a sample";
    return result;
  }
  const uint64_t stream = points ? kRansacPointStream : kRansacLineStream;

  RotationPair best;
  int best_count = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<bool> best_inliers;
  int required = config.max_iterations;
  int it = 0;
  for (; it < std::min(required, config.max_iterations); ++it) {
    RandomStream rng(config.rng_seed, stream, static_cast<uint64_t>(it));
    const std::vector<bool> sample = SampleMask(n, s, &rng);
    // Even iterations restart from the zero state, odd ones refine around
    // the best hypothesis so far.
    Eigen::Matrix<double, 6, 1> x0 = it % 2 == 0
                                         ? Eigen::Matrix<double, 6, 1>::Zero()
                                         : best.AsVector();
    for (int i = 0; i < 6; ++i) {
      x0[i] += rng.Uniform(-config.variation_magnitude,
                           config.variation_magnitude);
    }
    const RotationProblem problem =
        points ? BuildRotationProblem(tracks, sample, {}, true, false, form)
               : BuildRotationProblem(tracks, {}, sample, false, true, form);
    const RotationSolveResult solve =
        LmMinimize(problem, RotationPair::FromVector(x0), config.lm);
    if (!solve.rotations.AsVector().allFinite()) continue;

    std::vector<bool> inliers(n, false);
    RotationPair hypothesis = solve.rotations;
    const Matrix3 R10 = hypothesis.R10();
    const Matrix3 R12 = hypothesis.R12();
    if (points) {
      const auto t_dirs = NecDirections(problem, hypothesis);
      for (int i = 0; i < n; ++i) {
        inliers[i] = PointInlierResidual(tracks.points[i], R10, R12, t_dirs) <
                     config.thresholds.point;
      }
      hypothesis = RotationPair::FromMatrices(
          ResolveTwistedPair(tracks, inliers, 0, R10, t_dirs[0]),
          ResolveTwistedPair(tracks, inliers, 2, R12, t_dirs[1]));
    } else {
      for (int i = 0; i < n; ++i) {
        inliers[i] = LineInlierResidual(tracks.lines[i], R10, R12) <
                     config.thresholds.line;
      }
    }
    const int count = CountTrue(inliers);
    const double cost = solve.report.final_cost;
    if (count > best_count || (count == best_count && cost < best_cost)) {
      best = hypothesis;
      best_count = count;
      best_cost = cost;
      best_inliers = std::move(inliers);
      if (best_count >= s + config.min_extra_consensus) {
        required = RequiredIterations(static_cast<double>(best_count) / n, s,
                                      config.confidence,
                                      config.max_iterations);
      }
    }
  }
  result.iterations = it;
  if (best_count < s + config.min_extra_consensus) {
    result.failure_reason = "no hypothesis reached the minimum consensus";
    return result;
  }
  result.success = true;
  result.rotations = best;
  result.inliers = std::move(best_inliers);
  result.num_inliers = best_count;
  result.cost = best_cost;
  return result;
}

void SolveTranslation(const TrackSet& tracks,
                      const std::vector<bool>& point_mask,
                      const std::vector<bool>& line_mask,
                      const PipelineConfig& config, PoseEstimate* pose) {
  const Matrix3 R10 = pose->rotations.R10();
  const Matrix3 R12 = pose->rotations.R12();
  const FrameRotations rot = FrameRotations::FromRelative(R10, R12);
  pose->translation = SolveLigt(BuildLigtSystem(tracks, point_mask, line_mask,
                                                rot, LigtOptionsFor(config)));
  const auto parallax =
      MedianRotationCompensatedParallax(tracks, point_mask, R10, R12);
  const double focal = 0.5 * (tracks.K.fx + tracks.K.fy);
  if (parallax && *parallax < config.pure_rotation_parallax_sigmas *
                                  config.assumed_noise_px / focal) {
    pose->translation.pure_rotation = true;
  }
  pose->relative = ComputeRelativeTranslations(pose->translation, rot);
}

PoseEstimate EstimateThreeViewPose(const TrackSet& tracks,
                                   const PipelineConfig& config) {
  const Stopwatch total;
  PoseEstimate pose;
  const VariantTraits traits = TraitsOf(config.variant);
  const int s = config.ransac.sample_size;
  const int n_points = static_cast<int>(tracks.points.size());
  const int n_lines = static_cast<int>(tracks.lines.size());

  const Stopwatch ransac_timer;
  RansacResult point_ransac, line_ransac;
  if (traits.use_points && n_points >= s) {
    point_ransac = RansacRotation(tracks, FeatureKind::kPoints, config.ransac,
                                  config.line_form);
  }
  if (traits.use_lines && n_lines >= s) {
    line_ransac = RansacRotation(tracks, FeatureKind::kLines, config.ransac,
                                 config.line_form);
  }
  pose.ransac_point_iterations = point_ransac.iterations;
  pose.ransac_line_iterations = line_ransac.iterations;
  pose.timings.ransac_ms = ransac_timer.ElapsedMs();

  const RansacResult* init = nullptr;
  if (point_ransac.success && point_ransac.num_inliers >= s) {
    init = &point_ransac;
  } else if (line_ransac.success) {
    init = &line_ransac;
  } else if (point_ransac.success) {
    init = &point_ransac;
  }
  if (init == nullptr) {
    pose.failure_reason = "rotation RANSAC failed for every feature type";
    if (!point_ransac.failure_reason.empty()) {
      pose.failure_reason += "; points: " + point_ransac.failure_reason;
    }
    if (!line_ransac.failure_reason.empty()) {
      pose.failure_reason += "; lines: " + line_ransac.failure_reason;
    }
    pose.inliers.points.assign(n_points, false);
    pose.inliers.lines.assign(n_lines, false);
    pose.timings.total_ms = total.ElapsedMs();
    return pose;
  }
  pose.initialized_from_points = init == &point_ransac;

  // Each kind keeps its own RANSAC inliers unless classifying it at the
  // initial state yields a larger consensus, which happens when that
  // RANSAC settled on a wrong hypothesis.
  pose.rotations = init->rotations;
  const RotationProblem init_points = BuildRotationProblem(
      tracks, point_ransac.success ? point_ransac.inliers : std::vector<bool>{},
      {}, true, false, config.line_form);
  const InlierMasks at_init =
      ClassifyInliers(tracks, init->rotations,
                      NecDirections(init_points, init->rotations),
                      config.ransac.thresholds);
  auto choose = [](const RansacResult& own, const std::vector<bool>& other) {
    return own.success && own.num_inliers >= CountTrue(other) ? own.inliers
                                                              : other;
  };
  std::vector<bool> point_mask(n_points, false);
  std::vector<bool> line_mask(n_lines, false);
  if (traits.use_points) point_mask = choose(point_ransac, at_init.points);
  if (traits.use_lines) line_mask = choose(line_ransac, at_init.lines);

  // Rotation and translation on the current masks, then reclassification
  // at the refined pose. Features that change class trigger another round
  // from the current estimate.
  RotationPair start = init->rotations;
  for (int round = 0;; ++round) {
    const Stopwatch irls_timer;
    RotationProblem problem =
        BuildRotationProblem(tracks, point_mask, line_mask, traits.use_points,
                             traits.use_lines, config.line_form);
    RefineRotations(tracks, std::move(problem), point_mask, line_mask, start,
                    config, &pose);
    pose.timings.irls_ms += irls_timer.ElapsedMs();

    const Stopwatch ligt_timer;
    SolveTranslation(tracks, point_mask, line_mask, config, &pose);
    const std::array<Vector3, 2> t_dirs =
        DirectionsForClassification(pose, tracks, point_mask);
    pose.inliers = ClassifyInliers(tracks, pose.rotations, t_dirs,
                                   config.ransac.thresholds);
    if (config.inlier_gate_sigmas > 0.0) {
      pose.inliers = GateNormalizedResiduals(tracks, pose.rotations, t_dirs,
                                             pose.inliers,
                                             config.inlier_gate_sigmas);
    }
    if (!traits.use_points) pose.inliers.points.assign(n_points, false);
    if (!traits.use_lines) pose.inliers.lines.assign(n_lines, false);
    const bool changed =
        pose.inliers.points != point_mask || pose.inliers.lines != line_mask;
    const bool enough = pose.inliers.NumPointInliers() +
                            pose.inliers.NumLineInliers() >=
                        s;
    if (changed && enough && round + 1 < config.max_refinement_rounds) {
      point_mask = pose.inliers.points;
      line_mask = pose.inliers.lines;
      start = pose.rotations;
      pose.timings.ligt_ms += ligt_timer.ElapsedMs();
      continue;
    }
    if (changed && enough) {
      SolveTranslation(tracks, pose.inliers.points, pose.inliers.lines, config,
                       &pose);
    }
    pose.timings.ligt_ms += ligt_timer.ElapsedMs();
    break;
  }
  pose.success = true;
  pose.timings.total_ms = total.ElapsedMs();
  return pose;
}

PoseEstimate SolveFromInitial(const TrackSet& tracks,
                              const RotationPair& initial,
                              const PipelineConfig& config) {
  const Stopwatch total;
  PoseEstimate pose;
  const VariantTraits traits = TraitsOf(config.variant);
  const std::vector<bool> point_mask(tracks.points.size(), traits.use_points);
  const std::vector<bool> line_mask(tracks.lines.size(), traits.use_lines);

  const Stopwatch irls_timer;
  RotationProblem problem =
      BuildRotationProblem(tracks, point_mask, line_mask, traits.use_points,
                           traits.use_lines, config.line_form);
  RefineRotations(tracks, std::move(problem), point_mask, line_mask, initial,
                  config, &pose);
  pose.timings.irls_ms = irls_timer.ElapsedMs();

  const Stopwatch ligt_timer;
  SolveTranslation(tracks, point_mask, line_mask, config, &pose);
  pose.timings.ligt_ms = ligt_timer.ElapsedMs();
  pose.inliers.points = point_mask;
  pose.inliers.lines = line_mask;
  pose.success = true;
  pose.timings.total_ms = total.ElapsedMs();
  return pose;
}

}  // namespace tvpose

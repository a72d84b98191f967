#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tvpose/ligt.h"
#include "tvpose/rotation_cost.h"
#include "tvpose/rotation_solver.h"
#include "tvpose/tracks.h"

namespace tvpose {

// Rotation estimators compared in the experiments.
enum class SolverVariant {
  // Points and lines (NBC-mult), uncertainty-weighted.
  kRt2pl,
  // Points only, uncertainty-weighted.
  kPnec,
  // Points only, unweighted.
  kNec,
  // Lines only, unweighted.
  kNbc,
  // Lines only, uncertainty-weighted.
  kPnbc,
};

struct VariantTraits {
  bool use_points = true;
  bool use_lines = true;
  bool reweight = true;
};

VariantTraits TraitsOf(SolverVariant variant);
std::string_view ToString(SolverVariant variant);
// Throws std::invalid_argument for unknown names.
SolverVariant SolverVariantFromString(std::string_view name);
std::vector<SolverVariant> AllSolverVariants();

struct InlierThresholds {
  // |t^T (b1 x R1k bk)| with unit t and unit bearings.
  double point = 1e-2;
  // |n0 . (n1 x n2)| over unit normals.
  double line = 1e-2;
};

struct InlierMasks {
  std::vector<bool> points;
  std::vector<bool> lines;

  int NumPointInliers() const;
  int NumLineInliers() const;
};

// Largest epipolar residual of the track over the pairs (1,0) and (1,2) it
// is observed in; `t_dirs` holds the unit directions 1t0 and 1t2.
double PointInlierResidual(const PointTrack& track, const Matrix3& R10,
                           const Matrix3& R12,
                           const std::array<Vector3, 2>& t_dirs);
double LineInlierResidual(const LineTrack& track, const Matrix3& R10,
                          const Matrix3& R12);

InlierMasks ClassifyInliers(const TrackSet& tracks, const RotationPair& state,
                            const std::array<Vector3, 2>& t_dirs,
                            const InlierThresholds& thresholds);

// Residual divided by its std propagated from the observation covariances:
// the larger of the two epipolar pairs for points, the triple product for
// lines.
double NormalizedPointResidual(const PointTrack& track, const Matrix3& R10,
                               const Matrix3& R12,
                               const std::array<Vector3, 2>& t_dirs,
                               const CameraIntrinsics& K);
double NormalizedLineResidual(const LineTrack& track, const Matrix3& R10,
                              const Matrix3& R12, const CameraIntrinsics& K);

// Drops inliers whose normalized residual exceeds gate_sigmas robust
// standard deviations (1.4826 times the median over the inliers of the same
// kind). Kinds with fewer than five inliers and raw residuals below 1e-9
// are left unchanged.
InlierMasks GateNormalizedResiduals(const TrackSet& tracks,
                                    const RotationPair& state,
                                    const std::array<Vector3, 2>& t_dirs,
                                    const InlierMasks& masks,
                                    double gate_sigmas);

enum class FeatureKind { kPoints, kLines };

struct RansacConfig {
  int sample_size = 10;
  int max_iterations = 200;
  InlierThresholds thresholds;
  // Half-width of the uniform perturbation added to each Cayley component.
  double variation_magnitude = 0.1;
  double confidence = 0.99;
  uint64_t rng_seed = 0;
  // Consensus below sample_size + this many features is a failure.
  int min_extra_consensus = 4;
  LmOptions lm;
};

struct RansacResult {
  bool success = false;
  std::string failure_reason;
  RotationPair rotations;
  // Inliers of the estimated feature kind (size matches that list).
  std::vector<bool> inliers;
  int num_inliers = 0;
  int iterations = 0;
  double cost = 0.0;
};

// Hypotheses are LM solves on random samples started from uniform Cayley
// variation around the zero state (even iterations) or the best state so far
// (odd iterations), and scored by consensus over all features of the kind.
// Ties go to the lower cost, then to the earlier hypothesis. Point
// hypotheses are replaced by their twisted-pair counterpart when that puts
// more inliers in front of the cameras.
RansacResult RansacRotation(const TrackSet& tracks, FeatureKind kind,
                            const RansacConfig& config,
                            LineResidualForm form = LineResidualForm::kMult);

struct PipelineConfig {
  SolverVariant variant = SolverVariant::kRt2pl;
  LineResidualForm line_form = LineResidualForm::kMult;
  RansacConfig ransac;
  IrlsOptions irls;
  // Translation is reported as degenerate when the median
  // rotation-compensated parallax is below this many pixel stds.
  double pure_rotation_parallax_sigmas = 5.0;
  // Observation std assumed by the parallax test (pixels).
  double assumed_noise_px = 1.0;
  // Upper bound on IRLS solves; another one runs while reclassification at
  // the refined pose changes the inlier sets.
  int max_refinement_rounds = 3;
  // Inliers of the refined pose are also gated by normalized residual at
  // this many robust standard deviations; 0 disables the gate.
  double inlier_gate_sigmas = 4.0;
};

struct StageTimings {
  double ransac_ms = 0.0;
  double irls_ms = 0.0;
  double ligt_ms = 0.0;
  double total_ms = 0.0;
};

struct PoseEstimate {
  bool success = false;
  std::string failure_reason;
  RotationPair rotations;
  TranslationSolution translation;
  // Unit 0t1 and 1t2; zero when the translation is degenerate.
  RelativeTranslations relative;
  InlierMasks inliers;
  bool initialized_from_points = false;
  int ransac_point_iterations = 0;
  int ransac_line_iterations = 0;
  int lm_iterations = 0;
  bool rotation_converged = false;
  // Index of the first IRLS loop whose LM did not converge, or -1.
  int first_failed_loop = -1;
  double final_cost = 0.0;
  StageTimings timings;
};

// Translation from LiGT on the masked features, flagged as pure rotation by
// either the LiGT singular-value test or the parallax test.
void SolveTranslation(const TrackSet& tracks, const std::vector<bool>& point_mask,
                      const std::vector<bool>& line_mask,
                      const PipelineConfig& config, PoseEstimate* pose);

// Robust estimate: separate point and line RANSAC, initialization from the
// point result when it has at least sample_size inliers, IRLS on the pooled
// inliers, then LiGT, repeated from the refined pose while its inlier sets
// change. Failures are reported, never returned as a pose.
PoseEstimate EstimateThreeViewPose(const TrackSet& tracks,
                                   const PipelineConfig& config = {});

// Non-robust solve of the configured variant on all features from a given
// initial state, followed by the translation solve.
PoseEstimate SolveFromInitial(const TrackSet& tracks,
                              const RotationPair& initial,
                              const PipelineConfig& config = {});

}  // namespace tvpose

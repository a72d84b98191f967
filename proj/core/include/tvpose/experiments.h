#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tvpose/ligt.h"
#include "tvpose/pipeline.h"
#include "tvpose/random.h"
#include "tvpose/scene.h"

namespace tvpose {

// One row of every experiment CSV. Fields that do not apply are NaN.
struct TrialRecord {
  std::string experiment;
  std::string variant;
  std::string mode;
  int n_points = 0;
  int n_lines = 0;
  double noise_px = 0.0;
  double outlier_fraction = 0.0;
  // Initial-value deviation (degrees): per-axis bound for near-truth
  // starts, exact angle for the convergence test, rotation perturbation
  // for the translation experiment.
  double deviation_deg = 0.0;
  uint64_t seed = 0;
  double e_rot_deg = 0.0;
  double e_t_deg = 0.0;
  bool ok = false;
  bool converged = false;
  bool pure_rotation = false;
  double point_precision = 0.0;
  double point_recall = 0.0;
  double line_precision = 0.0;
  double line_recall = 0.0;
  double ransac_ms = 0.0;
  double irls_ms = 0.0;
  double ligt_ms = 0.0;
  double total_ms = 0.0;
  std::string note;
};

void WriteCsvHeader(std::ostream& out);
void WriteCsvRow(std::ostream& out, const TrialRecord& record);

// Runs fn(i) for i in [0, n) on `threads` workers (0 = hardware
// concurrency). Results must be written to per-index slots by fn.
void ParallelFor(int n, int threads, const std::function<void(int)>& fn);

// Seed of trial `trial` derived from a base seed; identical across variants
// so that comparisons are paired.
uint64_t TrialSeed(uint64_t base_seed, int trial);

// R * exp(w) with every component of w uniform in [-bound, bound] (radians).
Matrix3 PerturbRotationUniform(const Matrix3& R, double bound,
                               RandomStream* rng);
// R * exp(angle * axis) for a uniformly random unit axis.
Matrix3 PerturbRotationByAngle(const Matrix3& R, double angle,
                               RandomStream* rng);

struct NoiseSweepSpec {
  std::vector<double> noise_levels = {0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<SolverVariant> variants = {SolverVariant::kRt2pl,
                                         SolverVariant::kPnec};
  std::vector<SceneMode> modes = {SceneMode::kGeneral};
  int trials = 200;
  // Near-truth initialization bound per Cayley axis (radians).
  double init_deviation = 0.05;
  ScenarioConfig scene;
  uint64_t base_seed = 1;
  int threads = 0;
};

std::vector<TrialRecord> RunNoiseSweep(const NoiseSweepSpec& spec);

struct OutlierSweepSpec {
  std::vector<double> outlier_fractions = {0.0, 0.1, 0.2};
  std::vector<SolverVariant> variants = {SolverVariant::kRt2pl};
  int trials = 100;
  ScenarioConfig scene = [] {
    ScenarioConfig c;
    c.n_points = 100;
    c.n_lines = 100;
    c.noise_std = 0.5;
    return c;
  }();
  PipelineConfig pipeline;
  uint64_t base_seed = 1;
  int threads = 0;
};

// Full robust pipeline from a zero initial state.
std::vector<TrialRecord> RunOutlierSweep(const OutlierSweepSpec& spec);

struct ConvergenceSpec {
  std::vector<double> deviations_deg = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<LineResidualForm> forms = {LineResidualForm::kMult,
                                         LineResidualForm::kMini};
  int trials = 300;
  ScenarioConfig scene = [] {
    ScenarioConfig c;
    c.n_points = 0;
    c.n_lines = 15;
    c.noise_std = 0.5;
    return c;
  }();
  // A solve succeeds when the final rotation error is below this.
  double success_threshold_deg = 0.5;
  uint64_t base_seed = 1;
  int threads = 0;
};

// Unweighted line-only solves from starts exactly deviation_deg away from
// each true rotation.
std::vector<TrialRecord> RunConvergence(const ConvergenceSpec& spec);

enum class LigtVariant { kPoints, kLines, kPointsAndLines };
std::string_view ToString(LigtVariant variant);

struct LigtResilienceSpec {
  // Rotation perturbation grid (degrees), evaluated on noiseless scenes.
  std::vector<double> rotation_deviations_deg = {0, 2, 4, 6, 8, 10};
  // Pixel noise grid, evaluated with exact rotations.
  std::vector<double> noise_levels = {0, 2, 4, 6, 8, 10};
  int trials = 200;
  ScenarioConfig scene = [] {
    ScenarioConfig c;
    c.n_points = 10;
    c.n_lines = 10;
    return c;
  }();
  uint64_t base_seed = 1;
  int threads = 0;
};

// Records use experiment "ligt_rotation" or "ligt_noise" and the variant
// names "p-ligt", "l-ligt", "pl-ligt".
std::vector<TrialRecord> RunLigtResilience(const LigtResilienceSpec& spec);

struct LandscapeSpec {
  // Cayley vector of the true R10; R12 is held at truth.
  Vector3 truth = Vector3::Constant(0.2);
  double half_width = 0.2;
  int steps = 41;
  ScenarioConfig scene = [] {
    ScenarioConfig c;
    c.n_points = 0;
    c.n_lines = 15;
    return c;
  }();
};

struct LandscapeSample {
  double cx = 0.0;
  double cy = 0.0;
  double cost_mult = 0.0;
  double cost_mini = 0.0;
};

// Line costs over a grid of the first two Cayley components of R10 with the
// third held at its true value.
std::vector<LandscapeSample> RunCostLandscape(const LandscapeSpec& spec);
void WriteLandscapeCsv(std::ostream& out,
                       const std::vector<LandscapeSample>& samples);

struct SummaryRow {
  std::string experiment;
  std::string variant;
  std::string mode;
  double noise_px = 0.0;
  double outlier_fraction = 0.0;
  double deviation_deg = 0.0;
  int trials = 0;
  int failures = 0;
  double mean_e_rot = 0.0;
  double mean_e_t = 0.0;
  double median_e_rot = 0.0;
  double median_e_t = 0.0;
  double se_e_rot = 0.0;
  double se_e_t = 0.0;
  double success_rate = 0.0;
  double median_total_ms = 0.0;
};

// Groups by (experiment, variant, mode, noise, outliers, deviation). Means
// skip NaN entries; failed trials count in `failures`.
std::vector<SummaryRow> Summarize(const std::vector<TrialRecord>& records);
void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace tvpose

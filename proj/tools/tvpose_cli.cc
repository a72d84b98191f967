// Command-line driver for the synthetic experiments and for pose estimation
// on track files.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 solver failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tvpose/experiments.h"
#include "tvpose/pipeline.h"
#include "tvpose/scene.h"
#include "tvpose/track_io.h"

namespace {

using namespace tvpose;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;

// Scene options bound to a ScenarioConfig whose values are the defaults.
struct SceneFlags {
  explicit SceneFlags(const ScenarioConfig& base = {}) : config(base) {}

  ScenarioConfig config;
  std::string mode = "general";
  uint64_t seed = 1;

  void Register(CLI::App* app) {
    app->add_option("--points", config.n_points, "Number of point landmarks");
    app->add_option("--lines", config.n_lines, "Number of line landmarks");
    app->add_option("--noise", config.noise_std, "Pixel noise std");
    app->add_option("--outliers", config.outlier_fraction,
                    "Outlier fraction per type");
    app->add_option("--mode", mode, "general | planar | pure_rotation");
    app->add_option("--seed", seed, "Base RNG seed");
    app->add_option("--max-euler", config.max_euler,
                    "Euler angle bound (rad)");
    app->add_option("--min-depth", config.min_depth,
                    "Minimum landmark distance");
    app->add_option("--max-depth", config.max_depth,
                    "Maximum landmark distance");
    app->add_option("--min-translation", config.min_translation);
    app->add_option("--max-translation", config.max_translation);
    app->add_option("--focal", config.focal);
    app->add_option("--fov-tan", config.fov_tan,
                    "Half-width of the sampling frustum (tan of half angle)");
  }

  ScenarioConfig Config() const {
    ScenarioConfig c = config;
    c.mode = SceneModeFromString(mode);
    c.rng_seed = seed;
    return c;
  }
};

struct OutputFlags {
  std::string trials_path;
  std::string summary_path;

  void Register(CLI::App* app) {
    app->add_option("-o,--output", trials_path, "Per-trial CSV (default: none)");
    app->add_option("--summary", summary_path,
                    "Summary CSV (default: stdout)");
  }

  void Write(const std::vector<TrialRecord>& records) const {
    if (!trials_path.empty()) {
      std::ofstream out(trials_path);
      if (!out) throw std::runtime_error("cannot write " + trials_path);
      WriteCsvHeader(out);
      for (const TrialRecord& r : records) WriteCsvRow(out, r);
    }
    const auto rows = Summarize(records);
    if (summary_path.empty()) {
      WriteSummaryCsv(std::cout, rows);
    } else {
      std::ofstream out(summary_path);
      if (!out) throw std::runtime_error("cannot write " + summary_path);
      WriteSummaryCsv(out, rows);
    }
  }
};

std::vector<SolverVariant> ParseVariants(const std::vector<std::string>& names) {
  std::vector<SolverVariant> out;
  for (const std::string& n : names) out.push_back(SolverVariantFromString(n));
  return out;
}

std::vector<SceneMode> ParseModes(const std::vector<std::string>& names) {
  std::vector<SceneMode> out;
  for (const std::string& n : names) out.push_back(SceneModeFromString(n));
  return out;
}

void PrintPose(std::ostream& out, const PoseEstimate& pose) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", " ", "", "", "", "");
  out << "R10 " << pose.rotations.R10().format(fmt) << '\n';
  out << "R12 " << pose.rotations.R12().format(fmt) << '\n';
  if (pose.relative.pure_rotation) {
    out << "translation degenerate (pure rotation)\n";
  } else {
    out << "t01 " << pose.relative.t01.transpose().format(fmt) << '\n';
    out << "t12 " << pose.relative.t12.transpose().format(fmt) << '\n';
  }
  out << "point_inliers " << pose.inliers.NumPointInliers() << '/'
      << pose.inliers.points.size() << '\n';
  out << "line_inliers " << pose.inliers.NumLineInliers() << '/'
      << pose.inliers.lines.size() << '\n';
  out << "time_ms " << pose.timings.total_ms << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-view relative pose from points and lines"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  // synth
  SceneFlags synth_scene;
  std::string synth_init = "zero";
  std::string synth_variant = "rt2pl";
  auto* synth = app.add_subcommand("synth", "Generate one scene and solve it");
  synth_scene.Register(synth);
  synth->add_option("--init", synth_init, "zero (robust pipeline) | near-truth");
  synth->add_option("--variant", synth_variant);

  // sweep-noise
  SceneFlags noise_scene;
  OutputFlags noise_out;
  NoiseSweepSpec noise_spec;
  std::vector<std::string> noise_variants = {"rt2pl", "pnec"};
  std::vector<std::string> noise_modes = {"general"};
  auto* sweep_noise =
      app.add_subcommand("sweep-noise", "Error versus pixel noise");
  noise_scene.Register(sweep_noise);
  noise_out.Register(sweep_noise);
  sweep_noise->add_option("--noise-levels", noise_spec.noise_levels);
  sweep_noise->add_option("--variants", noise_variants);
  sweep_noise->add_option("--modes", noise_modes);
  sweep_noise->add_option("--trials", noise_spec.trials);
  sweep_noise->add_option("--init-deviation", noise_spec.init_deviation,
                          "Near-truth start bound per axis (rad)");

  // sweep-outliers
  OutlierSweepSpec outlier_spec;
  SceneFlags outlier_scene(outlier_spec.scene);
  OutputFlags outlier_out;
  std::vector<std::string> outlier_variants = {"rt2pl"};
  auto* sweep_outliers =
      app.add_subcommand("sweep-outliers", "Robust pipeline versus outliers");
  outlier_scene.Register(sweep_outliers);
  outlier_out.Register(sweep_outliers);
  sweep_outliers->add_option("--fractions", outlier_spec.outlier_fractions);
  sweep_outliers->add_option("--variants", outlier_variants);
  sweep_outliers->add_option("--trials", outlier_spec.trials);
  sweep_outliers->add_option("--point-threshold",
                             outlier_spec.pipeline.ransac.thresholds.point);
  sweep_outliers->add_option("--line-threshold",
                             outlier_spec.pipeline.ransac.thresholds.line);
  sweep_outliers->add_option("--variation",
                             outlier_spec.pipeline.ransac.variation_magnitude);
  sweep_outliers->add_option("--max-iterations",
                             outlier_spec.pipeline.ransac.max_iterations);
  sweep_outliers->add_option("--gate-sigmas",
                             outlier_spec.pipeline.inlier_gate_sigmas,
                             "Normalized-residual inlier gate (0 = off)");
  sweep_outliers->add_option("--refinement-rounds",
                             outlier_spec.pipeline.max_refinement_rounds);

  // convergence
  ConvergenceSpec conv_spec;
  SceneFlags conv_scene(conv_spec.scene);
  OutputFlags conv_out;
  std::string landscape_path;
  auto* convergence = app.add_subcommand(
      "convergence", "NBC-mult versus NBC-mini initial-value resilience");
  conv_scene.Register(convergence);
  conv_out.Register(convergence);
  convergence->add_option("--deviations", conv_spec.deviations_deg,
                          "Initial deviations (deg)");
  convergence->add_option("--trials", conv_spec.trials);
  convergence->add_option("--success-threshold",
                          conv_spec.success_threshold_deg);
  convergence->add_option("--landscape", landscape_path,
                          "Also write the cost landscape CSV here");

  // ligt
  LigtResilienceSpec ligt_spec;
  SceneFlags ligt_scene(ligt_spec.scene);
  OutputFlags ligt_out;
  auto* ligt = app.add_subcommand("ligt", "Translation solver resilience");
  ligt_scene.Register(ligt);
  ligt_out.Register(ligt);
  ligt->add_option("--rotation-deviations", ligt_spec.rotation_deviations_deg);
  ligt->add_option("--noise-levels", ligt_spec.noise_levels);
  ligt->add_option("--trials", ligt_spec.trials);

  // estimate
  std::string track_path;
  std::string gt_path;
  bool strict = false;
  double sigma = 1.0;
  auto* estimate =
      app.add_subcommand("estimate", "Robust pose from a track file");
  estimate->add_option("trackfile", track_path)->required();
  estimate->add_option("--gt", gt_path, "Ground-truth JSON for error report");
  estimate->add_flag("--strict", strict, "Fail on malformed records");
  estimate->add_option("--sigma", sigma, "Observation std (px)");
  std::string estimate_init = "zero";
  estimate->add_option("--init", estimate_init,
                       "zero (robust pipeline) | gt (near-truth from --gt)");

  // export-scene
  SceneFlags export_scene;
  std::string export_path;
  std::string export_gt;
  auto* export_cmd =
      app.add_subcommand("export-scene", "Write a synthetic scene");
  export_scene.Register(export_cmd);
  export_cmd->add_option("-o,--output", export_path)->required();
  export_cmd->add_option("--gt", export_gt, "Ground-truth JSON sidecar");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      const ScenarioConfig cfg = synth_scene.Config();
      const ThreeViewScene scene = GenerateScene(cfg);
      PipelineConfig pc;
      pc.variant = SolverVariantFromString(synth_variant);
      pc.ransac.rng_seed = cfg.rng_seed;
      PoseEstimate pose;
      if (synth_init == "near-truth") {
        RandomStream rng(cfg.rng_seed, 201);
        pose = SolveFromInitial(
            scene.tracks,
            RotationPair::FromMatrices(
                PerturbRotationUniform(scene.R10, 0.05, &rng),
                PerturbRotationUniform(scene.R12, 0.05, &rng)),
            pc);
      } else if (synth_init == "zero") {
        pose = EstimateThreeViewPose(scene.tracks, pc);
      } else {
        std::cerr << "unknown --init " << synth_init << '\n';
        return kExitUsage;
      }
      if (!pose.success) {
        std::cerr << "solver failure: " << pose.failure_reason << '\n';
        return kExitSolver;
      }
      PrintPose(std::cout, pose);
      std::cout << "e_rot_deg "
                << RotationError(scene.R10, pose.rotations.R10(), scene.R12,
                                 pose.rotations.R12())
                << '\n';
      if (!pose.relative.pure_rotation && scene.t01().norm() > 0.0) {
        std::cout << "e_t_deg "
                  << TranslationDirectionError(scene.t01(), pose.relative.t01,
                                               scene.t12(), pose.relative.t12)
                  << '\n';
      }
      return kExitOk;
    }
    if (sweep_noise->parsed()) {
      noise_spec.scene = noise_scene.Config();
      noise_spec.base_seed = noise_scene.seed;
      noise_spec.variants = ParseVariants(noise_variants);
      noise_spec.modes = ParseModes(noise_modes);
      noise_spec.threads = threads;
      noise_out.Write(RunNoiseSweep(noise_spec));
      return kExitOk;
    }
    if (sweep_outliers->parsed()) {
      outlier_spec.scene = outlier_scene.Config();
      outlier_spec.base_seed = outlier_scene.seed;
      outlier_spec.variants = ParseVariants(outlier_variants);
      outlier_spec.threads = threads;
      outlier_out.Write(RunOutlierSweep(outlier_spec));
      return kExitOk;
    }
    if (convergence->parsed()) {
      conv_spec.scene = conv_scene.Config();
      conv_spec.base_seed = conv_scene.seed;
      conv_spec.threads = threads;
      conv_out.Write(RunConvergence(conv_spec));
      if (!landscape_path.empty()) {
        LandscapeSpec ls;
        ls.scene = conv_scene.Config();
        ls.scene.noise_std = 0.0;
        std::ofstream out(landscape_path);
        if (!out) throw std::runtime_error("cannot write " + landscape_path);
        WriteLandscapeCsv(out, RunCostLandscape(ls));
      }
      return kExitOk;
    }
    if (ligt->parsed()) {
      ligt_spec.scene = ligt_scene.Config();
      ligt_spec.base_seed = ligt_scene.seed;
      ligt_spec.threads = threads;
      ligt_out.Write(RunLigtResilience(ligt_spec));
      return kExitOk;
    }
    if (export_cmd->parsed()) {
      const ThreeViewScene scene = GenerateScene(export_scene.Config());
      WriteTrackFile(export_path, scene.tracks);
      if (!export_gt.empty()) {
        std::ofstream out(export_gt);
        if (!out) throw std::runtime_error("cannot write " + export_gt);
        out << GroundTruthJson(scene) << '\n';
      }
      return kExitOk;
    }
    if (estimate->parsed()) {
      IngestOptions io;
      io.strict = strict;
      io.sigma_px = sigma;
      const IngestResult in = ReadTrackFile(track_path, io);
      for (const IngestWarning& w : in.warnings) {
        std::cerr << track_path << ':' << w.line_number << ": warning: "
                  << w.message << '\n';
      }
      std::optional<GroundTruth> gt;
      if (!gt_path.empty()) {
        std::ifstream f(gt_path);
        if (!f) throw std::runtime_error("cannot open " + gt_path);
        std::stringstream ss;
        ss << f.rdbuf();
        gt = ParseGroundTruthJson(ss.str());
      }
      PipelineConfig pc;
      PoseEstimate pose;
      if (estimate_init == "gt") {
        if (!gt) {
          std::cerr << "--init gt requires --gt\n";
          return kExitUsage;
        }
        pose = SolveFromInitial(in.tracks,
                                RotationPair::FromMatrices(gt->R10, gt->R12), pc);
      } else if (estimate_init == "zero") {
        pose = EstimateThreeViewPose(in.tracks, pc);
      } else {
        std::cerr << "unknown --init " << estimate_init << '\n';
        return kExitUsage;
      }
      if (!pose.success) {
        std::cerr << "solver failure: " << pose.failure_reason << '\n';
        return kExitSolver;
      }
      PrintPose(std::cout, pose);
      std::cout << "warnings " << in.warnings.size() << '\n';
      if (gt) {
        std::cout << "e_rot_deg "
                  << RotationError(gt->R10, pose.rotations.R10(), gt->R12,
                                   pose.rotations.R12())
                  << '\n';
        if (!pose.relative.pure_rotation && gt->t01().norm() > 0.0 &&
            gt->t12().norm() > 0.0) {
          std::cout << "e_t_deg "
                    << TranslationDirectionError(gt->t01(), pose.relative.t01,
                                                 gt->t12(), pose.relative.t12)
                    << '\n';
        }
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

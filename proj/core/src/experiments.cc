#include "tvpose/experiments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <thread>
#include <tuple>

namespace tvpose {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDeg = M_PI / 180.0;

constexpr uint64_t kInitStream = 201;

std::string Num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Quotes a CSV field when it contains a separator or quote.
std::string Field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

TrialRecord BaseRecord(const std::string& experiment, const std::string& variant,
                       const ScenarioConfig& cfg) {
  TrialRecord r;
  r.experiment = experiment;
  r.variant = variant;
  r.mode = std::string(ToString(cfg.mode));
  r.n_points = cfg.n_points;
  r.n_lines = cfg.n_lines;
  r.noise_px = cfg.noise_std;
  r.outlier_fraction = cfg.outlier_fraction;
  r.seed = cfg.rng_seed;
  r.e_rot_deg = kNaN;
  r.e_t_deg = kNaN;
  r.point_precision = r.point_recall = kNaN;
  r.line_precision = r.line_recall = kNaN;
  r.ransac_ms = r.irls_ms = r.ligt_ms = r.total_ms = kNaN;
  return r;
}

void FillPoseErrors(const ThreeViewScene& scene, const PoseEstimate& pose,
                    TrialRecord* r) {
  r->ok = pose.success;
  r->converged = pose.rotation_converged;
  r->pure_rotation = pose.translation.pure_rotation;
  if (!pose.success) {
    r->note = pose.failure_reason;
    return;
  }
  r->e_rot_deg = RotationError(scene.R10, pose.rotations.R10(), scene.R12,
                               pose.rotations.R12());
  const bool translation_defined = scene.t01().norm() > 0.0 &&
                                   scene.t12().norm() > 0.0;
  if (translation_defined && !pose.relative.pure_rotation) {
    r->e_t_deg = TranslationDirectionError(scene.t01(), pose.relative.t01,
                                           scene.t12(), pose.relative.t12);
  } else if (translation_defined) {
    r->note = "translation flagged degenerate";
  }
  r->irls_ms = pose.timings.irls_ms;
  r->ligt_ms = pose.timings.ligt_ms;
  r->total_ms = pose.timings.total_ms;
}

// Precision and recall of outlier detection (positive = outlier).
std::pair<double, double> OutlierScores(const std::vector<bool>& truth,
                                        const std::vector<bool>& inliers) {
  int tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    const bool predicted = !inliers[i];
    if (predicted && truth[i]) ++tp;
    if (predicted && !truth[i]) ++fp;
    if (!predicted && truth[i]) ++fn;
  }
  const double precision = tp + fp == 0 ? 1.0 : double(tp) / (tp + fp);
  const double recall = tp + fn == 0 ? 1.0 : double(tp) / (tp + fn);
  return {precision, recall};
}

template <typename Fn>
std::vector<TrialRecord> RunTasks(int n, int threads, Fn&& fn) {
  std::vector<TrialRecord> out(n);
  ParallelFor(n, threads, [&](int i) {
    try {
      out[i] = fn(i);
    } catch (const std::exception& e) {
      out[i].ok = false;
      out[i].note = std::string("exception: ") + e.what();
    }
  });
  return out;
}

double Median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const auto mid = v.begin() + static_cast<long>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

std::pair<double, double> MeanAndSe(const std::vector<double>& v) {
  if (v.empty()) return {kNaN, kNaN};
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / v.size();
  if (v.size() < 2) return {mean, kNaN};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (v.size() - 1) / v.size())};
}

}  // namespace

void WriteCsvHeader(std::ostream& out) {
  out << "experiment,variant,mode,n_points,n_lines,noise_px,outlier_fraction,"
         "deviation_deg,seed,e_rot_deg,e_t_deg,ok,converged,pure_rotation,"
         "point_precision,point_recall,line_precision,line_recall,ransac_ms,"
         "irls_ms,ligt_ms,total_ms,note\n";
}

void WriteCsvRow(std::ostream& out, const TrialRecord& r) {
  out << Field(r.experiment) << ',' << Field(r.variant) << ',' << Field(r.mode)
      << ',' << r.n_points << ',' << r.n_lines << ',' << Num(r.noise_px) << ','
      << Num(r.outlier_fraction) << ',' << Num(r.deviation_deg) << ','
      << r.seed << ',' << Num(r.e_rot_deg) << ',' << Num(r.e_t_deg) << ','
      << int(r.ok) << ',' << int(r.converged) << ',' << int(r.pure_rotation)
      << ',' << Num(r.point_precision) << ',' << Num(r.point_recall) << ','
      << Num(r.line_precision) << ',' << Num(r.line_recall) << ','
      << Num(r.ransac_ms) << ',' << Num(r.irls_ms) << ',' << Num(r.ligt_ms)
      << ',' << Num(r.total_ms) << ',' << Field(r.note) << '\n';
}

void ParallelFor(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) {
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  threads = std::min(threads, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

uint64_t TrialSeed(uint64_t base_seed, int trial) {
  return MixSeed(base_seed, 0, static_cast<uint64_t>(trial));
}

Matrix3 PerturbRotationUniform(const Matrix3& R, double bound,
                               RandomStream* rng) {
  const Vector3 w(rng->Uniform(-bound, bound), rng->Uniform(-bound, bound),
                  rng->Uniform(-bound, bound));
  return R * RotationFromAxisAngle(w);
}

Matrix3 PerturbRotationByAngle(const Matrix3& R, double angle,
                               RandomStream* rng) {
  return R * RotationFromAxisAngle(angle * rng->UnitVector());
}

std::vector<TrialRecord> RunNoiseSweep(const NoiseSweepSpec& spec) {
  struct Task {
    SceneMode mode;
    double noise;
    int trial;
  };
  std::vector<Task> tasks;
  for (SceneMode mode : spec.modes) {
    for (double noise : spec.noise_levels) {
      for (int t = 0; t < spec.trials; ++t) tasks.push_back({mode, noise, t});
    }
  }
  const int nv = static_cast<int>(spec.variants.size());
  std::vector<TrialRecord> records(tasks.size() * nv);
  ParallelFor(static_cast<int>(tasks.size()), spec.threads, [&](int i) {
    const Task& task = tasks[i];
    ScenarioConfig cfg = spec.scene;
    cfg.mode = task.mode;
    cfg.noise_std = task.noise;
    cfg.rng_seed = TrialSeed(spec.base_seed, task.trial);
    std::optional<ThreeViewScene> scene;
    std::string error;
    try {
      scene = GenerateScene(cfg);
    } catch (const std::exception& e) {
      error = e.what();
    }
    for (int v = 0; v < nv; ++v) {
      TrialRecord r =
          BaseRecord("noise_sweep", std::string(ToString(spec.variants[v])), cfg);
      r.deviation_deg = spec.init_deviation / kDeg;
      if (scene) {
        // The same start for every variant of this trial.
        RandomStream rng(cfg.rng_seed, kInitStream);
        const RotationPair init = RotationPair::FromMatrices(
            PerturbRotationUniform(scene->R10, spec.init_deviation, &rng),
            PerturbRotationUniform(scene->R12, spec.init_deviation, &rng));
        PipelineConfig pc;
        pc.variant = spec.variants[v];
        try {
          FillPoseErrors(*scene, SolveFromInitial(scene->tracks, init, pc), &r);
        } catch (const std::exception& e) {
          r.note = std::string("exception: ") + e.what();
        }
      } else {
        r.note = "scene generation failed: " + error;
      }
      records[static_cast<size_t>(i) * nv + v] = std::move(r);
    }
  });
  return records;
}

std::vector<TrialRecord> RunOutlierSweep(const OutlierSweepSpec& spec) {
  const int nf = static_cast<int>(spec.outlier_fractions.size());
  const int nv = static_cast<int>(spec.variants.size());
  const int n = nf * nv * spec.trials;
  return RunTasks(n, spec.threads, [&](int i) {
    const int trial = i % spec.trials;
    const int v = (i / spec.trials) % nv;
    const int f = i / (spec.trials * nv);
    ScenarioConfig cfg = spec.scene;
    cfg.outlier_fraction = spec.outlier_fractions[f];
    cfg.rng_seed = TrialSeed(spec.base_seed, trial);
    TrialRecord r =
        BaseRecord("outlier_sweep", std::string(ToString(spec.variants[v])), cfg);
    const ThreeViewScene scene = GenerateScene(cfg);
    PipelineConfig pc = spec.pipeline;
    pc.variant = spec.variants[v];
    pc.ransac.rng_seed = cfg.rng_seed;
    const PoseEstimate pose = EstimateThreeViewPose(scene.tracks, pc);
    FillPoseErrors(scene, pose, &r);
    if (pose.success) {
      r.ransac_ms = pose.timings.ransac_ms;
      const VariantTraits traits = TraitsOf(pc.variant);
      if (traits.use_points) {
        std::tie(r.point_precision, r.point_recall) =
            OutlierScores(scene.point_outliers, pose.inliers.points);
      }
      if (traits.use_lines) {
        std::tie(r.line_precision, r.line_recall) =
            OutlierScores(scene.line_outliers, pose.inliers.lines);
      }
    }
    return r;
  });
}

std::vector<TrialRecord> RunConvergence(const ConvergenceSpec& spec) {
  const int nd = static_cast<int>(spec.deviations_deg.size());
  const int nf = static_cast<int>(spec.forms.size());
  const int n = nd * spec.trials;
  std::vector<TrialRecord> records(static_cast<size_t>(n) * nf);
  ParallelFor(n, spec.threads, [&](int i) {
    const int trial = i % spec.trials;
    const double dev = spec.deviations_deg[i / spec.trials];
    ScenarioConfig cfg = spec.scene;
    cfg.rng_seed = TrialSeed(spec.base_seed, trial);
    ThreeViewScene scene;
    try {
      scene = GenerateScene(cfg);
    } catch (const std::exception& e) {
      for (int f = 0; f < nf; ++f) {
        TrialRecord& r = records[static_cast<size_t>(i) * nf + f];
        r = BaseRecord("convergence",
                       spec.forms[f] == LineResidualForm::kMult ? "nbc-mult"
                                                                : "nbc-mini",
                       cfg);
        r.deviation_deg = dev;
        r.note = std::string("exception: ") + e.what();
      }
      return;
    }
    RandomStream rng(cfg.rng_seed, kInitStream,
                     static_cast<uint64_t>(i / spec.trials));
    const RotationPair init = RotationPair::FromMatrices(
        PerturbRotationByAngle(scene.R10, dev * kDeg, &rng),
        PerturbRotationByAngle(scene.R12, dev * kDeg, &rng));
    for (int f = 0; f < nf; ++f) {
      const LineResidualForm form = spec.forms[f];
      TrialRecord r = BaseRecord(
          "convergence",
          form == LineResidualForm::kMult ? "nbc-mult" : "nbc-mini", cfg);
      r.deviation_deg = dev;
      const RotationProblem problem =
          BuildRotationProblem(scene.tracks, {}, {}, false, true, form);
      const RotationSolveResult solve = LmMinimize(problem, init);
      r.ok = true;
      r.e_rot_deg = RotationError(scene.R10, solve.rotations.R10(), scene.R12,
                                  solve.rotations.R12());
      r.converged = r.e_rot_deg < spec.success_threshold_deg;
      if (!solve.report.converged()) r.note = "lm did not converge";
      records[static_cast<size_t>(i) * nf + f] = std::move(r);
    }
  });
  return records;
}

std::string_view ToString(LigtVariant variant) {
  switch (variant) {
    case LigtVariant::kPoints:
      return "p-ligt";
    case LigtVariant::kLines:
      return "l-ligt";
    case LigtVariant::kPointsAndLines:
      return "pl-ligt";
  }
  return "unknown";
}

std::vector<TrialRecord> RunLigtResilience(const LigtResilienceSpec& spec) {
  struct Task {
    bool rotation_grid;
    double value;
    int trial;
  };
  std::vector<Task> tasks;
  for (double d : spec.rotation_deviations_deg) {
    for (int t = 0; t < spec.trials; ++t) tasks.push_back({true, d, t});
  }
  for (double s : spec.noise_levels) {
    for (int t = 0; t < spec.trials; ++t) tasks.push_back({false, s, t});
  }
  const std::array<LigtVariant, 3> variants = {
      LigtVariant::kPoints, LigtVariant::kLines, LigtVariant::kPointsAndLines};
  std::vector<TrialRecord> records(tasks.size() * variants.size());
  ParallelFor(static_cast<int>(tasks.size()), spec.threads, [&](int i) {
    const Task& task = tasks[i];
    ScenarioConfig cfg = spec.scene;
    cfg.rng_seed = TrialSeed(spec.base_seed, task.trial);
    cfg.noise_std = task.rotation_grid ? 0.0 : task.value;
    ThreeViewScene scene;
    try {
      scene = GenerateScene(cfg);
    } catch (const std::exception& e) {
      for (size_t v = 0; v < variants.size(); ++v) {
        TrialRecord& r = records[static_cast<size_t>(i) * variants.size() + v];
        r = BaseRecord(task.rotation_grid ? "ligt_rotation" : "ligt_noise",
                       std::string(ToString(variants[v])), cfg);
        r.deviation_deg = task.rotation_grid ? task.value : 0.0;
        r.note = std::string("exception: ") + e.what();
      }
      return;
    }
    Matrix3 R10 = scene.R10;
    Matrix3 R12 = scene.R12;
    if (task.rotation_grid) {
      RandomStream rng(cfg.rng_seed, kInitStream, 1000);
      R10 = PerturbRotationByAngle(R10, task.value * kDeg, &rng);
      R12 = PerturbRotationByAngle(R12, task.value * kDeg, &rng);
    }
    const FrameRotations rot = FrameRotations::FromRelative(R10, R12);
    for (size_t v = 0; v < variants.size(); ++v) {
      TrialRecord r =
          BaseRecord(task.rotation_grid ? "ligt_rotation" : "ligt_noise",
                     std::string(ToString(variants[v])), cfg);
      r.deviation_deg = task.rotation_grid ? task.value : 0.0;
      LigtBuildOptions options;
      options.use_points = variants[v] != LigtVariant::kLines;
      options.use_lines = variants[v] != LigtVariant::kPoints;
      const TranslationSolution sol =
          SolveLigt(BuildLigtSystem(scene.tracks, {}, {}, rot, options));
      const RelativeTranslations rel = ComputeRelativeTranslations(sol, rot);
      r.pure_rotation = sol.pure_rotation;
      r.ok = !sol.pure_rotation;
      r.converged = r.ok;
      if (r.ok) {
        r.e_t_deg = TranslationDirectionError(scene.t01(), rel.t01,
                                              scene.t12(), rel.t12);
      } else {
        r.note = "degenerate system";
      }
      records[static_cast<size_t>(i) * variants.size() + v] = std::move(r);
    }
  });
  return records;
}

std::vector<LandscapeSample> RunCostLandscape(const LandscapeSpec& spec) {
  ScenarioConfig cfg = spec.scene;
  cfg.fixed_c10 = spec.truth;
  const ThreeViewScene scene = GenerateScene(cfg);
  const RotationPair truth =
      RotationPair::FromMatrices(scene.R10, scene.R12);
  const RotationProblem mult = BuildRotationProblem(
      scene.tracks, {}, {}, false, true, LineResidualForm::kMult);
  const RotationProblem mini = BuildRotationProblem(
      scene.tracks, {}, {}, false, true, LineResidualForm::kMini);
  std::vector<LandscapeSample> samples;
  const int steps = std::max(spec.steps, 2);
  for (int a = 0; a < steps; ++a) {
    for (int b = 0; b < steps; ++b) {
      RotationPair state = truth;
      state.c10.x() =
          truth.c10.x() - spec.half_width + 2.0 * spec.half_width * a / (steps - 1);
      state.c10.y() =
          truth.c10.y() - spec.half_width + 2.0 * spec.half_width * b / (steps - 1);
      samples.push_back({state.c10.x(), state.c10.y(),
                         EvaluateRotationCost(mult, state).total,
                         EvaluateRotationCost(mini, state).total});
    }
  }
  return samples;
}

void WriteLandscapeCsv(std::ostream& out,
                       const std::vector<LandscapeSample>& samples) {
  out << "c_x,c_y,cost_mult,cost_mini\n";
  double last_x = kNaN;
  for (const LandscapeSample& s : samples) {
    // Blank line between scan rows for gnuplot's splot.
    if (!std::isnan(last_x) && s.cx != last_x) out << '\n';
    last_x = s.cx;
    out << Num(s.cx) << ',' << Num(s.cy) << ',' << Num(s.cost_mult) << ','
        << Num(s.cost_mini) << '\n';
  }
}

std::vector<SummaryRow> Summarize(const std::vector<TrialRecord>& records) {
  using Key = std::tuple<std::string, std::string, std::string, double, double,
                         double>;
  std::map<Key, std::vector<const TrialRecord*>> groups;
  std::vector<Key> order;
  for (const TrialRecord& r : records) {
    const Key key{r.experiment,      r.variant,       r.mode,
                  r.noise_px,        r.outlier_fraction, r.deviation_deg};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const Key& key : order) {
    const auto& group = groups[key];
    SummaryRow row;
    std::tie(row.experiment, row.variant, row.mode, row.noise_px,
             row.outlier_fraction, row.deviation_deg) = key;
    row.trials = static_cast<int>(group.size());
    std::vector<double> rot, t, ms;
    int successes = 0;
    for (const TrialRecord* r : group) {
      if (!r->ok) ++row.failures;
      if (r->converged) ++successes;
      if (!std::isnan(r->e_rot_deg)) rot.push_back(r->e_rot_deg);
      if (!std::isnan(r->e_t_deg)) t.push_back(r->e_t_deg);
      if (!std::isnan(r->total_ms)) ms.push_back(r->total_ms);
    }
    std::tie(row.mean_e_rot, row.se_e_rot) = MeanAndSe(rot);
    std::tie(row.mean_e_t, row.se_e_t) = MeanAndSe(t);
    row.median_e_rot = Median(rot);
    row.median_e_t = Median(t);
    row.success_rate = group.empty() ? kNaN : double(successes) / group.size();
    row.median_total_ms = Median(ms);
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "experiment,variant,mode,noise_px,outlier_fraction,deviation_deg,"
         "trials,failures,mean_e_rot_deg,se_e_rot_deg,median_e_rot_deg,"
         "mean_e_t_deg,se_e_t_deg,median_e_t_deg,success_rate,"
         "median_total_ms\n";
  for (const SummaryRow& r : rows) {
    out << Field(r.experiment) << ',' << Field(r.variant) << ','
        << Field(r.mode) << ',' << Num(r.noise_px) << ','
        << Num(r.outlier_fraction) << ',' << Num(r.deviation_deg) << ','
        << r.trials << ',' << r.failures << ',' << Num(r.mean_e_rot) << ','
        << Num(r.se_e_rot) << ',' << Num(r.median_e_rot) << ','
        << Num(r.mean_e_t) << ',' << Num(r.se_e_t) << ','
        << Num(r.median_e_t) << ',' << Num(r.success_rate) << ','
        << Num(r.median_total_ms) << '\n';
  }
}

}  // namespace tvpose

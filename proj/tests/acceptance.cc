// Acceptance checks for the three-view pose estimator. Prints one PASS/FAIL
// line per criterion. The exit status is zero when the set of failing
// criteria equals the --expect-fail list (empty by default), so a criterion
// that starts passing or failing unexpectedly turns the test red.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "oracles.h"
#include "test_util.h"
#include "tvpose/coplanarity.h"
#include "tvpose/experiments.h"
#include "tvpose/pipeline.h"
#include "tvpose/sym_eigen3.h"
#include "tvpose/track_io.h"

namespace tvpose {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double Median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool WithinHalf(double value, double reference) {
  return value >= 0.5 * reference && value <= 1.5 * reference;
}

// Mean errors of one (variant, mode, noise) group of a noise sweep. Failed
// trials are counted separately and excluded from the means.
struct GroupStats {
  int trials = 0;
  int failures = 0;
  double mean_rot = 0.0;
  double mean_t = 0.0;
  double max_rot = 0.0;
  double max_t = 0.0;
  int missing_t = 0;
};

GroupStats Group(const std::vector<TrialRecord>& records,
                 const std::string& variant, const std::string& mode,
                 double noise) {
  GroupStats g;
  std::vector<double> rot;
  std::vector<double> t;
  for (const TrialRecord& r : records) {
    if (r.variant != variant || r.mode != mode || r.noise_px != noise) continue;
    ++g.trials;
    if (!r.ok) {
      ++g.failures;
      continue;
    }
    rot.push_back(r.e_rot_deg);
    g.max_rot = std::max(g.max_rot, r.e_rot_deg);
    if (std::isnan(r.e_t_deg)) {
      ++g.missing_t;
    } else {
      t.push_back(r.e_t_deg);
      g.max_t = std::max(g.max_t, r.e_t_deg);
    }
  }
  g.mean_rot = Mean(rot);
  g.mean_t = Mean(t);
  return g;
}

NoiseSweepSpec TableSpec(SceneMode mode, std::vector<double> noise,
                         std::vector<SolverVariant> variants, int trials) {
  NoiseSweepSpec spec;
  spec.modes = {mode};
  spec.noise_levels = std::move(noise);
  spec.variants = std::move(variants);
  spec.trials = trials;
  return spec;
}

Outcome Criterion1() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<TrialRecord> records = RunNoiseSweep(
      TableSpec(SceneMode::kGeneral, {0.0}, {SolverVariant::kRt2pl}, 100));
  const double total_s = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
  int exact = 0;
  double worst_rot = 0.0;
  double worst_t = 0.0;
  for (const TrialRecord& r : records) {
    if (!r.ok || std::isnan(r.e_t_deg)) continue;
    worst_rot = std::max(worst_rot, r.e_rot_deg);
    worst_t = std::max(worst_t, r.e_t_deg);
    if (r.e_rot_deg < 1e-5 && r.e_t_deg < 1e-5) ++exact;
  }
  return {exact == 100 && total_s < 1.0,
          Format("%d/100 exact, max e_rot %.2e deg, max e_t %.2e deg, "
                 "%.3f s for all 100 scenes",
                 exact, worst_rot, worst_t, total_s)};
}

Outcome Criterion2() {
  const std::vector<double> noise = {0.5, 1.0, 1.5, 2.0};
  const std::vector<double> paper_rot = {0.07, 0.14, 0.21, 0.29};
  const std::vector<double> paper_t = {0.14, 0.27, 0.40, 0.55};
  const std::vector<TrialRecord> records = RunNoiseSweep(TableSpec(
      SceneMode::kGeneral, noise,
      {SolverVariant::kRt2pl, SolverVariant::kPnec}, 200));
  bool pass = true;
  std::string detail;
  for (size_t i = 0; i < noise.size(); ++i) {
    const GroupStats ours = Group(records, "rt2pl", "general", noise[i]);
    const GroupStats points = Group(records, "pnec", "general", noise[i]);
    const bool ok = WithinHalf(ours.mean_rot, paper_rot[i]) &&
                    WithinHalf(ours.mean_t, paper_t[i]) &&
                    ours.mean_rot < points.mean_rot &&
                    ours.mean_t < points.mean_t;
    pass = pass && ok;
    detail += Format("%s%.1fpx rt2pl %.3f/%.3f pnec %.3f/%.3f%s",
                     i ? "; " : "", noise[i], ours.mean_rot, ours.mean_t,
                     points.mean_rot, points.mean_t, ok ? "" : " (out)");
    if (ours.failures + points.failures > 0) {
      detail += Format(" [%d failures]", ours.failures + points.failures);
    }
  }
  return {pass, detail};
}

Outcome Criterion3() {
  const std::vector<TrialRecord> records = RunNoiseSweep(TableSpec(
      SceneMode::kPlanar, {0.0, 1.0}, {SolverVariant::kRt2pl}, 200));
  const GroupStats clean = Group(records, "rt2pl", "planar", 0.0);
  const GroupStats noisy = Group(records, "rt2pl", "planar", 1.0);
  const bool pass = clean.failures == 0 && clean.missing_t == 0 &&
                    clean.max_rot < 1e-6 && clean.max_t < 1e-6 &&
                    WithinHalf(noisy.mean_rot, 0.16);
  return {pass, Format("noise 0: max e_rot %.2e, max e_t %.2e deg "
                       "(%d failed, %d without e_t); 1px: mean e_rot %.3f "
                       "deg (band 0.08-0.24)",
                       clean.max_rot, clean.max_t, clean.failures,
                       clean.missing_t, noisy.mean_rot)};
}

Outcome Criterion4() {
  const std::vector<TrialRecord> records = RunNoiseSweep(TableSpec(
      SceneMode::kPureRotation, {0.0, 1.0},
      {SolverVariant::kRt2pl, SolverVariant::kNbc}, 200));
  const GroupStats clean = Group(records, "rt2pl", "pure_rotation", 0.0);
  const GroupStats nbc = Group(records, "nbc", "pure_rotation", 0.0);
  const GroupStats noisy = Group(records, "rt2pl", "pure_rotation", 1.0);
  const bool pass = clean.failures == 0 && clean.max_rot < 1e-6 &&
                    nbc.mean_rot > 0.1 && WithinHalf(noisy.mean_rot, 0.05);
  return {pass, Format("rt2pl noise 0 max e_rot %.2e deg; nbc noise 0 mean "
                       "e_rot %.3f deg; rt2pl 1px mean e_rot %.3f deg "
                       "(band 0.025-0.075)",
                       clean.max_rot, nbc.mean_rot, noisy.mean_rot)};
}

Outcome Criterion5() {
  ConvergenceSpec spec;
  spec.deviations_deg = {0.0, 5.0};
  spec.trials = 300;
  const std::vector<TrialRecord> records = RunConvergence(spec);
  // Success as specified (final e_rot below the threshold), plus whether the
  // 5 degree start reached the same minimum as the start at truth.
  std::map<std::string, int> successes;
  std::map<std::string, int> trials;
  std::map<std::string, int> same_minimum;
  std::map<std::pair<std::string, uint64_t>, double> at_truth;
  for (const TrialRecord& r : records) {
    if (r.deviation_deg == 0.0) at_truth[{r.variant, r.seed}] = r.e_rot_deg;
  }
  for (const TrialRecord& r : records) {
    if (r.deviation_deg != 5.0) continue;
    ++trials[r.variant];
    if (r.converged) ++successes[r.variant];
    if (std::abs(r.e_rot_deg - at_truth[{r.variant, r.seed}]) < 1e-3) {
      ++same_minimum[r.variant];
    }
  }
  auto rate = [&](std::map<std::string, int>& counts, const char* v) {
    return double(counts[v]) / trials[v];
  };
  const double mult = rate(successes, "nbc-mult");
  const double mini = rate(successes, "nbc-mini");
  return {mult >= mini,
          Format("5 deg start, %d trials: success nbc-mult %.3f, nbc-mini "
                 "%.3f; reached the minimum found from truth: mult %.3f, "
                 "mini %.3f",
                 trials["nbc-mult"], mult, mini,
                 rate(same_minimum, "nbc-mult"),
                 rate(same_minimum, "nbc-mini"))};
}

// One-sided paired test that a < b in the mean, normal approximation.
double PairedPValue(const std::vector<double>& a, const std::vector<double>& b) {
  const size_t n = a.size();
  if (n < 2) return 1.0;
  std::vector<double> d(n);
  for (size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = Mean(d);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (n - 1) / n);
  if (!(se > 0.0)) return mean < 0.0 ? 0.0 : 1.0;
  const double z = mean / se;
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

Outcome Criterion6() {
  const std::vector<TrialRecord> records = RunLigtResilience({});
  // Records come in (p, l, pl) triples per task.
  struct Node {
    std::vector<double> p, l, pl;
    int dropped = 0;
  };
  std::map<std::pair<std::string, double>, Node> nodes;
  for (size_t i = 0; i + 2 < records.size(); i += 3) {
    const TrialRecord& rp = records[i];
    const TrialRecord& rl = records[i + 1];
    const TrialRecord& rpl = records[i + 2];
    const double value =
        rp.experiment == "ligt_rotation" ? rp.deviation_deg : rp.noise_px;
    Node& node = nodes[{rp.experiment, value}];
    if (!rp.ok || !rl.ok || !rpl.ok) {
      ++node.dropped;
      continue;
    }
    node.p.push_back(rp.e_t_deg);
    node.l.push_back(rl.e_t_deg);
    node.pl.push_back(rpl.e_t_deg);
  }
  int ordered = 0;
  int significant = 0;
  std::string detail;
  for (const auto& [key, node] : nodes) {
    const double mp = Mean(node.p);
    const double ml = Mean(node.l);
    const double mpl = Mean(node.pl);
    // Noiseless nodes with exact rotations are solved exactly by all three.
    const bool tie = std::max({mp, ml, mpl}) < 1e-9;
    const bool ok = tie || (mpl <= mp && mpl <= ml);
    const double p_value =
        std::max(PairedPValue(node.pl, node.p), PairedPValue(node.pl, node.l));
    const bool sig = !tie && p_value < 0.05;
    ordered += ok;
    significant += sig;
    detail += Format("%s%s %g: pl %.3f p %.3f l %.3f%s%s",
                     detail.empty() ? "" : "; ",
                     key.first == "ligt_rotation" ? "rot" : "noise",
                     key.second, mpl, mp, ml, sig ? " *" : "",
                     node.dropped ? Format(" [%d dropped]", node.dropped).c_str()
                                  : "");
  }
  const int n = static_cast<int>(nodes.size());
  const bool pass = n == 12 && ordered == n && 2 * significant >= n;
  return {pass, Format("%d/%d nodes ordered, %d/%d significant (* = p<0.05 "
                       "vs both); ",
                       ordered, n, significant, n) +
                    detail};
}

Outcome Criterion7() {
  OutlierSweepSpec spec;
  spec.outlier_fractions = {0.2};
  spec.trials = 100;
  const std::vector<TrialRecord> records = RunOutlierSweep(spec);
  std::vector<double> rot, ms, pp, pr, lp, lr;
  int failures = 0;
  for (const TrialRecord& r : records) {
    if (!r.ok) {
      ++failures;
      rot.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    rot.push_back(r.e_rot_deg);
    ms.push_back(r.total_ms);
    pp.push_back(r.point_precision);
    pr.push_back(r.point_recall);
    lp.push_back(r.line_precision);
    lr.push_back(r.line_recall);
  }
  const double med_rot = Median(rot);
  const double med_ms = Median(ms);
  const bool pass = med_rot < 0.5 && Mean(pp) > 0.9 && Mean(pr) > 0.9 &&
                    Mean(lp) > 0.9 && Mean(lr) > 0.9 && med_ms < 50.0;
  return {pass,
          Format("median e_rot %.3f deg; outlier precision/recall points "
                 "%.3f/%.3f lines %.3f/%.3f; median %.2f ms; %d failures",
                 med_rot, Mean(pp), Mean(pr), Mean(lp), Mean(lr), med_ms,
                 failures)};
}

Outcome Criterion8() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  // Analytic gradients against central differences.
  double worst_grad = 0.0;
  for (int i = 0; i < 100; ++i) {
    ScenarioConfig cfg;
    cfg.n_points = 20;
    cfg.n_lines = 20;
    cfg.noise_std = 1.0;
    cfg.rng_seed = 1000 + i;
    const ThreeViewScene scene = GenerateScene(cfg);
    for (LineResidualForm form :
         {LineResidualForm::kMult, LineResidualForm::kMini}) {
      const RotationProblem problem =
          BuildRotationProblem(scene.tracks, {}, {}, true, true, form);
      Eigen::Matrix<double, 6, 1> x;
      for (int k = 0; k < 6; ++k) x[k] = u(rng);
      const auto analytic = testing::AnalyticCostGradient(problem, x);
      const auto numeric = testing::NumericCostGradient(problem, x);
      worst_grad = std::max(worst_grad,
                            (analytic - numeric).norm() / numeric.norm());
    }
  }
  // Triple product squared against det M.
  double worst_det = 0.0;
  for (int i = 0; i < 10000; ++i) {
    LineNormals line;
    for (Vector3& n : line.n) n = testing::RandomUnit(&rng);
    const Matrix3 R10 = testing::RandomRotation(&rng, 1.0);
    const Matrix3 R12 = testing::RandomRotation(&rng, 1.0);
    const double mult = NbcMultResidual(NormalsInFrame1(line, R10, R12));
    worst_det = std::max(
        worst_det,
        std::abs(mult * mult - NbcMatrix(line, R10, R12).matrix().determinant()));
  }
  // Eigen solver against characteristic-polynomial roots.
  double worst_eig = 0.0;
  std::uniform_real_distribution<double> e(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    Matrix3 B;
    for (int k = 0; k < 9; ++k) B.data()[k] = e(rng);
    const Matrix3 A = B * B.transpose();
    const SymEigen3 eig = SolveSymmetric3(A);
    const std::array<double, 3> roots = testing::CharacteristicRoots(A);
    for (int k = 0; k < 3; ++k) {
      worst_eig = std::max(worst_eig, std::abs(eig.values[k] - roots[k]));
    }
  }
  const bool pass = worst_grad < 1e-5 && worst_det < 1e-10 && worst_eig < 1e-9;
  return {pass, Format("gradient rel. error %.2e (200 states), |mult^2 - det| "
                       "%.2e, eigenvalue error %.2e (1e4 matrices)",
                       worst_grad, worst_det, worst_eig)};
}

Outcome Criterion9() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       ("tvpose_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  int exact = 0;
  double worst_rot = 0.0;
  double worst_t = 0.0;
  std::string error;
  for (int i = 0; i < 100 && error.empty(); ++i) {
    try {
      ScenarioConfig cfg;
      cfg.rng_seed = TrialSeed(9, i);
      const ThreeViewScene scene = GenerateScene(cfg);
      const fs::path tracks = dir / "scene.tvp";
      const fs::path gt_path = dir / "scene_gt.json";
      WriteTrackFile(tracks.string(), scene.tracks);
      std::ofstream(gt_path) << GroundTruthJson(scene) << '\n';

      const IngestResult in = ReadTrackFile(tracks.string(), {.strict = true});
      std::stringstream text;
      text << std::ifstream(gt_path).rdbuf();
      const GroundTruth gt = ParseGroundTruthJson(text.str());
      RandomStream rng(cfg.rng_seed, 7);
      const RotationPair init = RotationPair::FromMatrices(
          PerturbRotationUniform(gt.R10, 0.05, &rng),
          PerturbRotationUniform(gt.R12, 0.05, &rng));
      const PoseEstimate pose = SolveFromInitial(in.tracks, init);
      if (!pose.success || pose.relative.pure_rotation) continue;
      const double e_rot = RotationError(gt.R10, pose.rotations.R10(), gt.R12,
                                         pose.rotations.R12());
      const double e_t = TranslationDirectionError(
          gt.t01(), pose.relative.t01, gt.t12(), pose.relative.t12);
      worst_rot = std::max(worst_rot, e_rot);
      worst_t = std::max(worst_t, e_t);
      if (e_rot < 1e-5 && e_t < 1e-5) ++exact;
    } catch (const std::exception& e) {
      error = e.what();
    }
  }
  fs::remove_all(dir);
  if (!error.empty()) return {false, "exception: " + error};
  return {exact == 100,
          Format("%d/100 exact through track and ground-truth files, max "
                 "e_rot %.2e deg, max e_t %.2e deg",
                 exact, worst_rot, worst_t)};
}

}  // namespace
}  // namespace tvpose

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> expect_fail;
  std::vector<int> only;
  app.add_option("--expect-fail", expect_fail,
                 "Criteria known to fail; exit status reflects deviations "
                 "from this list");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<tvpose::Outcome()>> criteria = {
      tvpose::Criterion1, tvpose::Criterion2, tvpose::Criterion3,
      tvpose::Criterion4, tvpose::Criterion5, tvpose::Criterion6,
      tvpose::Criterion7, tvpose::Criterion8, tvpose::Criterion9};
  std::set<int> failed;
  int passed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    const tvpose::Outcome outcome = criteria[i]();
    const double s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    std::printf("criterion %d: %s  %s (%.1f s)\n", id,
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str(), s);
    std::fflush(stdout);
    if (outcome.pass) {
      ++passed;
    } else {
      failed.insert(id);
    }
  }
  std::set<int> expected;
  for (int id : expect_fail) {
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) {
      expected.insert(id);
    }
  }
  std::printf("%d passed, %zu failed\n", passed, failed.size());
  if (failed != expected) {
    std::printf("failing set differs from --expect-fail\n");
    return 1;
  }
  return 0;
}

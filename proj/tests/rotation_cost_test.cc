#include "tvpose/rotation_cost.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "test_util.h"
#include "tvpose/experiments.h"
#include "tvpose/rotation_solver.h"
#include "tvpose/uncertainty.h"

namespace tvpose {
namespace {

using Vector6 = Eigen::Matrix<double, 6, 1>;

RotationProblem NoisyProblem(uint64_t seed, LineResidualForm form,
                             bool random_weights) {
  ScenarioConfig cfg;
  cfg.n_points = 20;
  cfg.n_lines = 20;
  cfg.noise_std = 1.0;
  cfg.rng_seed = seed;
  const ThreeViewScene scene = GenerateScene(cfg);
  RotationProblem problem =
      BuildRotationProblem(scene.tracks, {}, {}, true, true, form);
  if (random_weights) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (auto& t : problem.pairs10) t.weight = u(rng);
    for (auto& t : problem.pairs12) t.weight = u(rng);
    for (auto& t : problem.lines) t.weight = u(rng);
  }
  return problem;
}

double Cost(const RotationProblem& problem, const Vector6& x) {
  return EvaluateRotationCost(problem, RotationPair::FromVector(x)).total;
}

void CheckGradient(LineResidualForm form) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const RotationProblem problem = NoisyProblem(i, form, i % 2 == 1);
    Vector6 x;
    for (int k = 0; k < 6; ++k) x[k] = u(rng);
    Eigen::VectorXd r;
    const CostBreakdown cost =
        EvaluateRotationCost(problem, RotationPair::FromVector(x), &r);
    EXPECT_NEAR(r.squaredNorm(), cost.total, 1e-12 * cost.total);
    const Vector6 analytic = testing::AnalyticCostGradient(problem, x);
    const Vector6 numeric = testing::NumericCostGradient(problem, x);
    EXPECT_LT((analytic - numeric).norm(), 1e-5 * numeric.norm())
        << "state " << i << "\nanalytic " << analytic.transpose()
        << "\nnumeric  " << numeric.transpose();
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(RotationCost, MultGradientMatchesFiniteDifferences) {
  CheckGradient(LineResidualForm::kMult);
}

TEST(RotationCost, MiniGradientMatchesFiniteDifferences) {
  CheckGradient(LineResidualForm::kMini);
}

TEST(RotationCost, BreakdownSumsToTotal) {
  const RotationProblem problem =
      NoisyProblem(3, LineResidualForm::kMult, true);
  const CostBreakdown c = EvaluateRotationCost(problem, RotationPair{});
  EXPECT_NEAR(c.points10 + c.points12 + c.lines, c.total, 1e-14 * c.total);
  // Point terms are the minimal eigenvalues of the weighted matrices.
  std::vector<Vector3> normals;
  std::vector<double> weights;
  for (const PointPairTerm& t : problem.pairs10) {
    normals.push_back(t.b1.cross(t.bk));
    weights.push_back(t.weight);
  }
  EXPECT_NEAR(c.points10,
              CoplanarityMatrix::FromNormals(normals, weights).MinEigenvalue(),
              1e-14);
}

TEST(RotationCost, ZeroAtTruthForNoiselessScene) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ThreeViewScene scene = testing::NoiselessScene(seed);
    for (LineResidualForm form :
         {LineResidualForm::kMult, LineResidualForm::kMini}) {
      const RotationProblem problem =
          BuildRotationProblem(scene.tracks, {}, {}, true, true, form);
      const CostBreakdown c = EvaluateRotationCost(
          problem, RotationPair::FromMatrices(scene.R10, scene.R12));
      EXPECT_LT(c.total, 1e-24);
    }
  }
}

TEST(RotationCost, InvariantToTermOrderAndBearingSigns) {
  const RotationProblem problem =
      NoisyProblem(4, LineResidualForm::kMult, true);
  RotationProblem shuffled = problem;
  std::mt19937_64 rng(42);
  std::shuffle(shuffled.pairs10.begin(), shuffled.pairs10.end(), rng);
  std::shuffle(shuffled.pairs12.begin(), shuffled.pairs12.end(), rng);
  std::shuffle(shuffled.lines.begin(), shuffled.lines.end(), rng);
  for (PointPairTerm& t : shuffled.pairs10) t.b1 = -t.b1;
  for (LineTerm& t : shuffled.lines) t.normals.n[2] = -t.normals.n[2];
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 20; ++i) {
    Vector6 x;
    for (int k = 0; k < 6; ++k) x[k] = u(rng);
    const double a = Cost(problem, x);
    EXPECT_NEAR(Cost(shuffled, x), a, 1e-12 * a);
  }
}

TEST(RotationCost, MaskSelectsTerms) {
  const ThreeViewScene scene = testing::NoiselessScene(6, 10, 10);
  std::vector<bool> pmask(10, false);
  std::vector<bool> lmask(10, false);
  pmask[3] = true;
  lmask[2] = true;
  lmask[7] = true;
  const RotationProblem p = BuildRotationProblem(
      scene.tracks, pmask, lmask, true, true, LineResidualForm::kMini);
  EXPECT_LE(p.pairs10.size(), 1u);
  EXPECT_LE(p.pairs12.size(), 1u);
  ASSERT_EQ(p.lines.size(), 2u);
  EXPECT_EQ(p.lines[0].track, 2);
  EXPECT_EQ(p.lines[1].track, 7);
  EXPECT_EQ(p.NumResiduals(),
            static_cast<int>(p.pairs10.size() + p.pairs12.size()) + 6);
  const RotationProblem lines_only = BuildRotationProblem(
      scene.tracks, {}, {}, false, true, LineResidualForm::kMult);
  EXPECT_TRUE(lines_only.pairs10.empty());
  EXPECT_EQ(lines_only.lines.size(), 10u);
}

TEST(RotationSolver, LmRecoversNoiselessRotation) {
  std::mt19937_64 rng(43);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ThreeViewScene scene = testing::NoiselessScene(seed);
    const RotationProblem problem = BuildRotationProblem(
        scene.tracks, {}, {}, true, true, LineResidualForm::kMult);
    const RotationPair start = RotationPair::FromMatrices(
        scene.R10 * testing::RandomRotation(&rng, 0.05),
        scene.R12 * testing::RandomRotation(&rng, 0.05));
    const RotationSolveResult result = LmMinimize(problem, start);
    EXPECT_TRUE(result.report.converged());
    EXPECT_LT(RotationError(scene.R10, result.rotations.R10(), scene.R12,
                            result.rotations.R12()),
              1e-8);
    const std::vector<double>& h = result.report.cost_history;
    for (size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]);
  }
}

TEST(RotationSolver, IrlsKeepsLoopReports) {
  ScenarioConfig cfg;
  cfg.noise_std = 1.0;
  cfg.rng_seed = 7;
  const ThreeViewScene scene = GenerateScene(cfg);
  const RotationProblem problem = BuildRotationProblem(
      scene.tracks, {}, {}, true, true, LineResidualForm::kMult);
  const IrlsResult result = IrlsSolve(
      scene.tracks, problem, {}, {},
      RotationPair::FromMatrices(scene.R10, scene.R12));
  EXPECT_EQ(result.loop_reports.size(), 5u);
  EXPECT_TRUE(result.converged());
  EXPECT_LT(RotationError(scene.R10, result.rotations.R10(), scene.R12,
                          result.rotations.R12()),
            1.0);
  for (const LineTerm& t : result.problem.lines) {
    EXPECT_GE(t.weight, kMinWeight);
  }
}

TEST(RotationSolver, StartAtTruthStopsImmediately) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ThreeViewScene scene = testing::NoiselessScene(seed);
    const RotationProblem problem = BuildRotationProblem(
        scene.tracks, {}, {}, true, true, LineResidualForm::kMult);
    const RotationSolveResult result =
        LmMinimize(problem, RotationPair::FromMatrices(scene.R10, scene.R12));
    EXPECT_TRUE(result.report.converged());
    EXPECT_LE(result.report.iterations, 2);
    EXPECT_LT(result.report.final_cost, 1e-16);
  }
}

TEST(RotationSolver, ConvergesFromFiveDegrees) {
  std::mt19937_64 rng(44);
  const double five = 5.0 * std::numbers::pi / 180.0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const ThreeViewScene scene = testing::NoiselessScene(seed);
    const RotationProblem problem = BuildRotationProblem(
        scene.tracks, {}, {}, true, true, LineResidualForm::kMult);
    const RotationPair start = RotationPair::FromMatrices(
        scene.R10 * RotationFromAxisAngle(five * testing::RandomUnit(&rng)),
        scene.R12 * RotationFromAxisAngle(five * testing::RandomUnit(&rng)));
    const RotationSolveResult result = LmMinimize(problem, start);
    const double error_rad =
        RotationError(scene.R10, result.rotations.R10(), scene.R12,
                      result.rotations.R12()) *
        std::numbers::pi / 180.0;
    EXPECT_LT(error_rad, 1e-6) << "seed " << seed;
  }
}

TEST(RotationSolver, IrlsWithoutNoiseMatchesUnweightedSolve) {
  std::mt19937_64 rng(45);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const ThreeViewScene scene = testing::NoiselessScene(seed);
    const RotationProblem problem = BuildRotationProblem(
        scene.tracks, {}, {}, true, true, LineResidualForm::kMult);
    const RotationPair start = RotationPair::FromMatrices(
        scene.R10 * testing::RandomRotation(&rng, 0.05),
        scene.R12 * testing::RandomRotation(&rng, 0.05));
    const RotationPair weighted =
        IrlsSolve(scene.tracks, problem, {}, {}, start).rotations;
    const RotationPair unweighted = LmMinimize(problem, start).rotations;
    EXPECT_LT(RotationError(weighted.R10(), unweighted.R10(), weighted.R12(),
                            unweighted.R12()),
              1e-8);
  }
}

// Half of the features carry 4x the pixel noise of the others, and the
// tracks know their own noise level.
TrackSet HeteroscedasticTracks(const ThreeViewScene& clean,
                               std::mt19937_64* rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  auto sigma_of = [](int j) { return j % 2 == 0 ? 0.5 : 2.0; };
  TrackSet tracks;
  tracks.K = clean.tracks.K;
  for (const PointTrack& t : clean.tracks.points) {
    const double s = sigma_of(t.id);
    std::array<std::optional<PixelPoint>, 3> pixels;
    for (int k = 0; k < 3; ++k) {
      pixels[k] = PixelPoint{t.pixels[k].u + s * noise(*rng),
                             t.pixels[k].v + s * noise(*rng)};
    }
    tracks.points.push_back(MakePointTrack(t.id, pixels, tracks.K, s));
  }
  for (const LineTrack& t : clean.tracks.lines) {
    const double s = sigma_of(t.id);
    std::array<std::array<PixelPoint, 2>, 3> endpoints;
    for (int k = 0; k < 3; ++k) {
      for (int e = 0; e < 2; ++e) {
        const PixelPoint& p = t.observations[k].endpoints[e];
        endpoints[k][e] = {p.u + s * noise(*rng), p.v + s * noise(*rng)};
      }
    }
    tracks.lines.push_back(MakeLineTrack(t.id, endpoints, tracks.K, s));
  }
  return tracks;
}

TEST(RotationSolver, WeightingHelpsUnderHeteroscedasticNoise) {
  std::mt19937_64 rng(46);
  constexpr int kTrials = 500;
  int weighted_better = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const ThreeViewScene clean = testing::NoiselessScene(1000 + trial);
    const TrackSet tracks = HeteroscedasticTracks(clean, &rng);
    const RotationProblem problem = BuildRotationProblem(
        tracks, {}, {}, true, true, LineResidualForm::kMult);
    const RotationPair start = RotationPair::FromMatrices(clean.R10, clean.R12);
    const RotationPair weighted =
        IrlsSolve(tracks, problem, {}, {}, start).rotations;
    const RotationPair unweighted = LmMinimize(problem, start).rotations;
    const double e_w = RotationError(clean.R10, weighted.R10(), clean.R12,
                                     weighted.R12());
    const double e_u = RotationError(clean.R10, unweighted.R10(), clean.R12,
                                     unweighted.R12());
    weighted_better += e_w < e_u;
  }
  EXPECT_GE(weighted_better, 0.8 * kTrials) << weighted_better;
}

TEST(RotationCost, MultLandscapeHasSingleBasin) {
  const LandscapeSpec spec;
  const std::vector<LandscapeSample> samples = RunCostLandscape(spec);
  ASSERT_EQ(samples.size(), static_cast<size_t>(spec.steps * spec.steps));
  auto at = [&](int a, int b) { return samples[a * spec.steps + b].cost_mult; };
  const int center = spec.steps / 2;
  EXPECT_LT(at(center, center), 1e-20);
  int local_minima = 0;
  for (int a = 0; a < spec.steps; ++a) {
    for (int b = 0; b < spec.steps; ++b) {
      bool is_min = true;
      for (int da = -1; da <= 1; ++da) {
        for (int db = -1; db <= 1; ++db) {
          const int na = a + da;
          const int nb = b + db;
          if ((da == 0 && db == 0) || na < 0 || nb < 0 || na >= spec.steps ||
              nb >= spec.steps) {
            continue;
          }
          is_min = is_min && at(a, b) < at(na, nb);
        }
      }
      local_minima += is_min;
    }
  }
  EXPECT_EQ(local_minima, 1);
}

}  // namespace
}  // namespace tvpose

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "tvpose/experiments.h"
#include "tvpose/ligt.h"
#include "tvpose/pipeline.h"
#include "tvpose/rotation_solver.h"
#include "tvpose/scene.h"
#include "tvpose/sym_eigen3.h"

namespace tvpose {
namespace {

ThreeViewScene MakeScene(int points, int lines, double noise, double outliers,
                         uint64_t seed) {
  ScenarioConfig cfg;
  cfg.n_points = points;
  cfg.n_lines = lines;
  cfg.noise_std = noise;
  cfg.outlier_fraction = outliers;
  cfg.rng_seed = seed;
  return GenerateScene(cfg);
}

void BM_SymmetricEigen3(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Matrix3> matrices(1024);
  for (Matrix3& A : matrices) {
    Matrix3 B;
    for (int k = 0; k < 9; ++k) B.data()[k] = u(rng);
    A = B * B.transpose();
  }
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolveSymmetric3(matrices[i++ % matrices.size()]));
  }
}
BENCHMARK(BM_SymmetricEigen3);

void BM_RotationCost(benchmark::State& state) {
  const ThreeViewScene scene =
      MakeScene(state.range(0), state.range(0), 1.0, 0.0, 2);
  const RotationProblem problem = BuildRotationProblem(
      scene.tracks, {}, {}, true, true, LineResidualForm::kMult);
  const RotationPair x = RotationPair::FromMatrices(scene.R10, scene.R12);
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  for (auto _ : state) {
    benchmark::DoNotOptimize(EvaluateRotationCost(problem, x, &r, &J));
  }
}
BENCHMARK(BM_RotationCost)->Arg(15)->Arg(100);

void BM_LmSolve(benchmark::State& state) {
  const ThreeViewScene scene = MakeScene(15, 15, 1.0, 0.0, 3);
  const RotationProblem problem = BuildRotationProblem(
      scene.tracks, {}, {}, true, true, LineResidualForm::kMult);
  RandomStream rng(3, 0);
  const RotationPair init = RotationPair::FromMatrices(
      PerturbRotationUniform(scene.R10, 0.05, &rng),
      PerturbRotationUniform(scene.R12, 0.05, &rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(LmMinimize(problem, init));
  }
}
BENCHMARK(BM_LmSolve)->Unit(benchmark::kMicrosecond);

void BM_Ligt(benchmark::State& state) {
  const ThreeViewScene scene =
      MakeScene(state.range(0), state.range(0), 1.0, 0.0, 4);
  const FrameRotations rot = FrameRotations::FromRelative(scene.R10, scene.R12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        SolveLigt(BuildLigtSystem(scene.tracks, {}, {}, rot)));
  }
}
BENCHMARK(BM_Ligt)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_NearTruthSolve(benchmark::State& state) {
  const ThreeViewScene scene = MakeScene(15, 15, 1.0, 0.0, 5);
  const RotationPair init = RotationPair::FromMatrices(scene.R10, scene.R12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(SolveFromInitial(scene.tracks, init));
  }
}
BENCHMARK(BM_NearTruthSolve)->Unit(benchmark::kMillisecond);

// Full robust pipeline at 100 points + 100 lines with 20% outliers of each
// type, cycling through scenes so that RANSAC luck averages out.
void BM_RobustPipeline(benchmark::State& state) {
  std::vector<ThreeViewScene> scenes;
  for (uint64_t seed = 0; seed < 8; ++seed) {
    scenes.push_back(MakeScene(100, 100, 0.5, 0.2, seed));
  }
  size_t i = 0;
  for (auto _ : state) {
    PipelineConfig config;
    config.ransac.rng_seed = i;
    benchmark::DoNotOptimize(
        EstimateThreeViewPose(scenes[i++ % scenes.size()].tracks, config));
  }
}
BENCHMARK(BM_RobustPipeline)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace tvpose

BENCHMARK_MAIN();

#include "tvpose/rotation_solver.h"

#include "tvpose/uncertainty.h"

namespace tvpose {
namespace {

// Minimal eigenvector of the weighted epipolar block, or +z if empty.
Vector3 NecDirection(const std::vector<PointPairTerm>& terms,
                     const Matrix3& R) {
  std::vector<Vector3> normals;
  std::vector<double> weights;
  normals.reserve(terms.size());
  weights.reserve(terms.size());
  for (const PointPairTerm& t : terms) {
    normals.push_back(t.b1.cross(R * t.bk));
    weights.push_back(t.weight);
  }
  const CoplanarityMatrix M = CoplanarityMatrix::FromNormals(normals, weights);
  if (M.num_terms() == 0) return Vector3::UnitZ();
  return M.MinEigenvector();
}

}  // namespace

RotationSolveResult LmMinimize(const RotationProblem& problem,
                               const RotationPair& initial,
                               const LmOptions& options) {
  const LmFunction fn = [&problem](const Eigen::VectorXd& x,
                                   Eigen::VectorXd* r, Eigen::MatrixXd* J) {
    EvaluateRotationCost(problem,
                         RotationPair::FromVector(
                             Eigen::Matrix<double, 6, 1>(x)),
                         r, J);
  };
  Eigen::VectorXd x = initial.AsVector();
  RotationSolveResult result;
  result.report = LevenbergMarquardt(fn, &x, options);
  result.rotations = RotationPair::FromVector(Eigen::Matrix<double, 6, 1>(x));
  return result;
}

std::array<Matrix3, 3> LineNormalCovariances(const LineTrack& track,
                                             const CameraIntrinsics& K) {
  std::array<Matrix3, 3> covs;
  for (int k = 0; k < 3; ++k) {
    const LineObservation& obs = track.observations[k];
    covs[k] = NormalCovarianceUnscented(
                  obs, LineObservationCovariance(obs, track.sigma_line), K)
                  .cov;
  }
  return covs;
}

std::array<Vector3, 2> WeightingTranslations(
    const TrackSet& tracks, const RotationProblem& problem,
    const RotationPair& state, const std::vector<bool>& point_mask,
    const std::vector<bool>& line_mask, const LigtBuildOptions& options) {
  const Matrix3 R10 = state.R10();
  const Matrix3 R12 = state.R12();
  const FrameRotations rot = FrameRotations::FromRelative(R10, R12);
  const TranslationSolution sol =
      SolveLigt(BuildLigtSystem(tracks, point_mask, line_mask, rot, options));
  if (!sol.pure_rotation) {
    const Vector3 t10 = rot.R_kG[1] * (sol.t_G[0] - sol.t_G[1]);
    const Vector3 t12 = rot.R_kG[1] * (sol.t_G[2] - sol.t_G[1]);
    if (t10.norm() > 1e-12 && t12.norm() > 1e-12) {
      return {t10.normalized(), t12.normalized()};
    }
  }
  return {NecDirection(problem.pairs10, R10),
          NecDirection(problem.pairs12, R12)};
}

void UpdateWeights(const TrackSet& tracks, const RotationPair& state,
                   const std::array<Vector3, 2>& t_dirs,
                   const std::vector<std::array<Matrix3, 3>>& line_covs,
                   RotationProblem* problem) {
  const Matrix3 R10 = state.R10();
  const Matrix3 R12 = state.R12();
  for (PointPairTerm& term : problem->pairs10) {
    term.weight =
        PointWeight(tracks.points[term.track], 1, 0, R10, t_dirs[0], tracks.K)
            .weight;
  }
  for (PointPairTerm& term : problem->pairs12) {
    term.weight =
        PointWeight(tracks.points[term.track], 1, 2, R12, t_dirs[1], tracks.K)
            .weight;
  }
  for (size_t i = 0; i < problem->lines.size(); ++i) {
    LineTerm& term = problem->lines[i];
    term.weight = LineWeight(term.normals, R10, R12, line_covs[i]).weight;
  }
}

IrlsResult IrlsSolve(const TrackSet& tracks, RotationProblem problem,
                     const std::vector<bool>& point_mask,
                     const std::vector<bool>& line_mask,
                     const RotationPair& initial, const IrlsOptions& options) {
  for (PointPairTerm& t : problem.pairs10) t.weight = 1.0;
  for (PointPairTerm& t : problem.pairs12) t.weight = 1.0;
  for (LineTerm& t : problem.lines) t.weight = 1.0;

  std::vector<std::array<Matrix3, 3>> line_covs;
  line_covs.reserve(problem.lines.size());
  for (const LineTerm& t : problem.lines) {
    line_covs.push_back(LineNormalCovariances(tracks.lines[t.track], tracks.K));
  }

  IrlsResult result;
  RotationPair state = initial;
  const int loops = std::max(1, options.loops);
  for (int loop = 0; loop < loops; ++loop) {
    if (loop > 0) {
      const auto t_dirs = WeightingTranslations(tracks, problem, state,
                                                point_mask, line_mask,
                                                options.ligt);
      UpdateWeights(tracks, state, t_dirs, line_covs, &problem);
    }
    RotationSolveResult solve = LmMinimize(problem, state, options.lm);
    state = solve.rotations;
    if (!solve.report.converged() && result.first_failed_loop < 0) {
      result.first_failed_loop = loop;
    }
    result.loop_reports.push_back(std::move(solve.report));
  }
  result.rotations = state;
  result.problem = std::move(problem);
  return result;
}

}  // namespace tvpose

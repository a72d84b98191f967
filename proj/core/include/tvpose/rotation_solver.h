#pragma once

#include <vector>

#include "tvpose/levenberg_marquardt.h"
#include "tvpose/ligt.h"
#include "tvpose/rotation_cost.h"
#include "tvpose/tracks.h"

namespace tvpose {

struct RotationSolveResult {
  RotationPair rotations;
  LmReport report;
};

// Minimizes EvaluateRotationCost over the Cayley chart of both rotations.
RotationSolveResult LmMinimize(const RotationProblem& problem,
                               const RotationPair& initial,
                               const LmOptions& options = {});

struct IrlsOptions {
  int loops = 5;
  LmOptions lm;
  // Translation solve used to refresh the point weights in each loop.
  LigtBuildOptions ligt;
};

struct IrlsResult {
  RotationPair rotations;
  // One report per LM solve, in loop order.
  std::vector<LmReport> loop_reports;
  // Index of the first loop whose LM solve did not converge, or -1.
  int first_failed_loop = -1;
  // The problem with the weights used in the last loop.
  RotationProblem problem;

  bool converged() const { return first_failed_loop < 0; }
};

// Normal covariances of a line's three observations, each in its own frame.
std::array<Matrix3, 3> LineNormalCovariances(const LineTrack& track,
                                             const CameraIntrinsics& K);

// Unit translation directions 1t0 and 1t2 in frame 1 used by the point
// weights: from LiGT on the selected features, falling back to the minimal
// eigenvectors of the epipolar coplanarity matrices when LiGT is degenerate.
std::array<Vector3, 2> WeightingTranslations(const TrackSet& tracks,
                                             const RotationProblem& problem,
                                             const RotationPair& state,
                                             const std::vector<bool>& point_mask,
                                             const std::vector<bool>& line_mask,
                                             const LigtBuildOptions& options);

// Refreshes all term weights in place at `state`.
void UpdateWeights(const TrackSet& tracks, const RotationPair& state,
                   const std::array<Vector3, 2>& t_dirs,
                   const std::vector<std::array<Matrix3, 3>>& line_covs,
                   RotationProblem* problem);

// Alternates LM solves and weight refreshes, starting from unit weights.
// `problem` selects the terms; its weights are ignored.
IrlsResult IrlsSolve(const TrackSet& tracks, RotationProblem problem,
                     const std::vector<bool>& point_mask,
                     const std::vector<bool>& line_mask,
                     const RotationPair& initial,
                     const IrlsOptions& options = {});

}  // namespace tvpose

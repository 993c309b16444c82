#pragma once

#include <span>
#include <vector>

#include "geoloc/scene.hpp"

namespace geoloc {

struct SolverConfig {
  double huber_delta = 1.0;          // pixels
  int max_iterations = 50;
  double step_tolerance = 1e-9;      // norm of the update
  double residual_threshold = 5.0;   // pixels: mean residual for keeping a point
  int min_observations = 4;          // matched tracks needed for a pose
  double initial_damping = 1e-4;

  /// Throws InvalidArgument.
  void validate() const;
};

/// IRLS weight rho'(r)/r of the Huber loss at residual norm r.
double huber_weight(double residual_norm, double delta);
/// Huber loss on a squared residual norm: s below delta^2, else 2 delta sqrt(s) - delta^2.
double huber_cost(double squared_norm, double delta);

/// Scalar summaries of a pose covariance: mean per-axis positional standard
/// deviation, and the rotation angle of exp of the per-axis rotational
/// standard deviations.
struct IsometricSigmas {
  double position = 0.0;  // meters
  double rotation = 0.0;  // radians
};

/// Throws NegativeVariance when a diagonal entry is below -1e-12.
IsometricSigmas isometric_sigmas(const Covariance6& c);

struct TriangulationResult {
  std::vector<MapPoint> map_points;
  std::vector<PointId> rejected_point_ids;
  /// Mean of the surviving points' mean residuals, pixels.
  double mean_residual = 0.0;
};

/// One point from its views. `poses[i]` observed `pixels[i]`. Throws
/// InsufficientObservations (< 2 views), DegenerateGeometry (parallel rays or
/// coincident centers), NoConvergence.
MapPoint triangulate_point(PointId id, std::span<const Pose> poses,
                           std::span<const Observation> observations, const Intrinsics& k,
                           const SolverConfig& cfg);

/// Triangulates every point seen in at least two of `frames` (which must carry
/// label poses) with the frame poses held fixed. Points with a mean residual
/// above the threshold, non-positive depth in an observing camera, or
/// degenerate geometry are rejected. Throws InsufficientObservations when no
/// point has two views and DegenerateGeometry when every candidate is
/// degenerate.
TriangulationResult forward_intersection(std::span<const Frame> frames,
                                         std::span<const Observation> observations,
                                         const Intrinsics& k, const SolverConfig& cfg);

struct GeometricEstimate {
  PoseEstimate estimate;        // source = Geometric
  double residual_sum = 0.0;    // sum of squared residual norms, pixels^2
  int track_count = 0;          // matched tracks p
  /// ||r||^2 / (2p - 1), floored at kMinResidualVariance.
  double residual_variance = 0.0;
  /// True when the floor was hit (noise-free data).
  bool residual_floored = false;
  IsometricSigmas sigmas;
  int iterations = 0;
  /// Robust cost at the initial pose and after every accepted LM step.
  std::vector<double> cost_trace;
};

/// Residual variance floor, pixels^2. Exact data would otherwise produce an
/// infinite information matrix.
inline constexpr double kMinResidualVariance = 1e-12;

/// Refines a camera pose against triangulated points. Observations are
/// matched to `map_points` by point id; unmatched ones are ignored. Throws
/// InsufficientObservations, NoConvergence, SingularInformation.
GeometricEstimate backward_intersection(std::span<const MapPoint> map_points,
                                        std::span<const Observation> query_obs, const Intrinsics& k,
                                        const Pose& init, const SolverConfig& cfg);

}  // namespace geoloc

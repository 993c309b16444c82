#include "geoloc/geo_locator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>

#include "geoloc/error.hpp"

namespace geoloc {

void SolverConfig::validate() const {
  if (!(huber_delta > 0.0) || max_iterations <= 0 || !(step_tolerance > 0.0) ||
      !(residual_threshold > 0.0) || min_observations <= 0 || !(initial_damping > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "solver config values must be positive");
  }
}

double huber_weight(double residual_norm, double delta) {
  return residual_norm <= delta ? 1.0 : delta / residual_norm;
}

double huber_cost(double squared_norm, double delta) {
  if (squared_norm <= delta * delta) return squared_norm;
  return 2.0 * delta * std::sqrt(squared_norm) - delta * delta;
}

IsometricSigmas isometric_sigmas(const Covariance6& c) {
  const Vector6d diag = c.diagonal();
  if (diag.minCoeff() < -1e-12) {
    throw Error(ErrorCode::NegativeVariance, "covariance diagonal has a negative entry");
  }
  const Vector6d sd = diag.cwiseMax(0.0).cwiseSqrt();
  IsometricSigmas out;
  out.position = sd.head<3>().sum() / 3.0;
  out.rotation = misalignment_angle(Eigen::Matrix3d::Identity(), exp_so3(sd.tail<3>()));
  return out;
}

namespace {

// Per-track linearization at a state.
template <int N>
struct Linearization {
  std::vector<Eigen::Vector2d> residuals;
  std::vector<Eigen::Matrix<double, 2, N>> jacobians;
};

template <typename State>
struct LmOutcome {
  State state;
  int iterations = 0;
  std::vector<double> costs;  // initial, then after each accepted step
};

double robust_cost(const std::vector<Eigen::Vector2d>& residuals, double delta) {
  double cost = 0.0;
  for (const auto& e : residuals) cost += huber_cost(e.squaredNorm(), delta);
  return cost;
}

// Levenberg-Marquardt on a Huber-robustified sum of 2D residuals, solved as
// iteratively reweighted least squares. `model.linearize(state, lin, with_jacobians)`
// returns false when the state is infeasible (a point behind a camera);
// `model.retract(state, delta)` applies an update.
template <int N, typename State, typename Model>
LmOutcome<State> solve_robust(State state, const Model& model, const SolverConfig& cfg) {
  using VecN = Eigen::Matrix<double, N, 1>;
  using MatN = Eigen::Matrix<double, N, N>;

  Linearization<N> lin;
  if (!model.linearize(state, lin, true)) {
    throw Error(ErrorCode::NonPositiveDepth, "initial estimate places a point behind a camera");
  }
  double cost = robust_cost(lin.residuals, cfg.huber_delta);
  double damping = cfg.initial_damping;
  Linearization<N> trial;
  std::vector<double> costs = {cost};

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    MatN h = MatN::Zero();
    VecN g = VecN::Zero();
    for (std::size_t j = 0; j < lin.residuals.size(); ++j) {
      const double w = huber_weight(lin.residuals[j].norm(), cfg.huber_delta);
      h.noalias() += w * lin.jacobians[j].transpose() * lin.jacobians[j];
      g.noalias() += w * lin.jacobians[j].transpose() * lin.residuals[j];
    }
    MatN damped = h;
    damped.diagonal() += damping * h.diagonal();
    const VecN step = -damped.ldlt().solve(g);
    if (!step.allFinite()) throw Error(ErrorCode::NoConvergence, "non-finite update");

    const State candidate = model.retract(state, step);
    const bool feasible = model.linearize(candidate, trial, false);
    const double new_cost = feasible ? robust_cost(trial.residuals, cfg.huber_delta)
                                     : std::numeric_limits<double>::infinity();
    const bool small = step.norm() < cfg.step_tolerance;
    if (new_cost <= cost) {
      state = candidate;
      cost = new_cost;
      costs.push_back(cost);
      damping = std::max(damping / 10.0, 1e-12);
      if (small) return {state, iter, std::move(costs)};
      model.linearize(state, lin, true);
    } else {
      // No improvement available from a negligible step: at the minimum.
      if (small) return {state, iter, std::move(costs)};
      damping *= 10.0;
    }
  }
  throw Error(ErrorCode::NoConvergence,
              "no convergence within " + std::to_string(cfg.max_iterations) + " iterations");
}

struct PointModel {
  std::span<const Pose> poses;
  std::span<const Observation> observations;
  const Intrinsics& k;

  bool linearize(const Eigen::Vector3d& x, Linearization<3>& lin, bool with_jacobians) const {
    lin.residuals.resize(poses.size());
    lin.jacobians.resize(with_jacobians ? poses.size() : 0);
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (!(poses[i].inverse_transform(x).z() > kMinDepth)) return false;
      lin.residuals[i] = project(poses[i], x, k) - observations[i].pixel;
      if (with_jacobians) lin.jacobians[i] = point_jacobian_residual(poses[i], x, k);
    }
    return true;
  }

  Eigen::Vector3d retract(const Eigen::Vector3d& x, const Eigen::Vector3d& d) const { return x + d; }
};

struct PoseModel {
  std::span<const Eigen::Vector3d> points;
  std::span<const Eigen::Vector2d> pixels;
  const Intrinsics& k;

  bool linearize(const Pose& pose, Linearization<6>& lin, bool with_jacobians) const {
    lin.residuals.resize(points.size());
    lin.jacobians.resize(with_jacobians ? points.size() : 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!(pose.inverse_transform(points[i]).z() > kMinDepth)) return false;
      lin.residuals[i] = project(pose, points[i], k) - pixels[i];
      if (with_jacobians) lin.jacobians[i] = right_jacobian_residual(pose, points[i], k);
    }
    return true;
  }

  Pose retract(const Pose& pose, const Vector6d& d) const { return pose * exp_se3(d); }
};

constexpr double kParallelRayAngle = 1e-6;
constexpr double kMinBaseline = 1e-12;

}  // namespace

MapPoint triangulate_point(PointId id, std::span<const Pose> poses,
                           std::span<const Observation> observations, const Intrinsics& k,
                           const SolverConfig& cfg) {
  if (poses.size() != observations.size()) {
    throw Error(ErrorCode::InvalidArgument, "one pose per observation required");
  }
  if (poses.size() < 2) {
    throw Error(ErrorCode::InsufficientObservations,
                "point " + std::to_string(id) + " seen in fewer than 2 frames");
  }
  std::vector<Eigen::Vector3d> rays(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    rays[i] = (poses[i].rotation() * k.back_project(observations[i].pixel)).normalized();
  }

  // Widest camera baseline seeds the midpoint initialization.
  std::size_t a = 0;
  std::size_t b = 1;
  double widest = -1.0;
  double max_ray_angle = 0.0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t j = i + 1; j < poses.size(); ++j) {
      const double baseline = (poses[i].position() - poses[j].position()).norm();
      if (baseline > widest) {
        widest = baseline;
        a = i;
        b = j;
      }
      max_ray_angle =
          std::max(max_ray_angle, std::atan2(rays[i].cross(rays[j]).norm(), rays[i].dot(rays[j])));
    }
  }
  if (max_ray_angle < kParallelRayAngle || widest < kMinBaseline) {
    throw Error(ErrorCode::DegenerateGeometry,
                "point " + std::to_string(id) + ": observing rays are parallel or share a center");
  }

  // Closest points between the two rays c_a + s d_a and c_b + t d_b.
  const Eigen::Vector3d& ca = poses[a].position();
  const Eigen::Vector3d& cb = poses[b].position();
  const Eigen::Vector3d& da = rays[a];
  const Eigen::Vector3d& db = rays[b];
  const Eigen::Vector3d w = ca - cb;
  const double dadb = da.dot(db);
  const double denom = 1.0 - dadb * dadb;
  if (denom < kParallelRayAngle * kParallelRayAngle) {
    throw Error(ErrorCode::DegenerateGeometry,
                "point " + std::to_string(id) + ": widest-baseline rays are parallel");
  }
  const double s = (dadb * db.dot(w) - da.dot(w)) / denom;
  const double t = (db.dot(w) - dadb * da.dot(w)) / denom;
  const Eigen::Vector3d init = 0.5 * ((ca + s * da) + (cb + t * db));

  const PointModel model{poses, observations, k};
  const auto outcome = solve_robust<3>(init, model, cfg);

  MapPoint mp;
  mp.point_id = id;
  mp.position = outcome.state;
  mp.observations.assign(observations.begin(), observations.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    sum += (project(poses[i], mp.position, k) - observations[i].pixel).norm();
  }
  mp.mean_residual = sum / static_cast<double>(poses.size());
  return mp;
}

TriangulationResult forward_intersection(std::span<const Frame> frames,
                                         std::span<const Observation> observations,
                                         const Intrinsics& k, const SolverConfig& cfg) {
  cfg.validate();
  std::unordered_map<FrameId, const Pose*> pose_of;
  for (const Frame& f : frames) {
    if (!f.label_pose) throw Error(ErrorCode::MissingPose, "frame " + std::to_string(f.id) + " has no pose");
    pose_of[f.id] = &*f.label_pose;
  }
  std::map<PointId, std::vector<Observation>> by_point;
  for (const Observation& o : observations) {
    if (pose_of.count(o.frame_id)) by_point[o.point_id].push_back(o);
  }

  TriangulationResult result;
  int candidates = 0;
  int degenerate = 0;
  double residual_total = 0.0;
  for (auto& [id, obs] : by_point) {
    if (obs.size() < 2) continue;
    ++candidates;
    std::sort(obs.begin(), obs.end(),
              [](const Observation& x, const Observation& y) { return x.frame_id < y.frame_id; });
    std::vector<Pose> poses;
    poses.reserve(obs.size());
    for (const auto& o : obs) poses.push_back(*pose_of.at(o.frame_id));
    try {
      MapPoint mp = triangulate_point(id, poses, obs, k, cfg);
      if (mp.mean_residual > cfg.residual_threshold) {
        result.rejected_point_ids.push_back(id);
        continue;
      }
      residual_total += mp.mean_residual;
      result.map_points.push_back(std::move(mp));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateGeometry) ++degenerate;
      if (e.code() != ErrorCode::DegenerateGeometry && e.code() != ErrorCode::NonPositiveDepth &&
          e.code() != ErrorCode::NoConvergence) {
        throw;
      }
      result.rejected_point_ids.push_back(id);
    }
  }
  if (candidates == 0) {
    throw Error(ErrorCode::InsufficientObservations, "no point is observed in two or more frames");
  }
  if (degenerate == candidates) {
    throw Error(ErrorCode::DegenerateGeometry, "every candidate point has degenerate geometry");
  }
  if (!result.map_points.empty()) {
    result.mean_residual = residual_total / static_cast<double>(result.map_points.size());
  }
  return result;
}

GeometricEstimate backward_intersection(std::span<const MapPoint> map_points,
                                        std::span<const Observation> query_obs, const Intrinsics& k,
                                        const Pose& init, const SolverConfig& cfg) {
  cfg.validate();
  std::unordered_map<PointId, const MapPoint*> by_id;
  for (const MapPoint& mp : map_points) by_id[mp.point_id] = &mp;

  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector2d> pixels;
  FrameId frame_id = query_obs.empty() ? 0 : query_obs.front().frame_id;
  for (const Observation& o : query_obs) {
    const auto it = by_id.find(o.point_id);
    if (it == by_id.end()) continue;
    // A point behind the initial camera cannot be a valid match.
    if (!(init.inverse_transform(it->second->position).z() > kMinDepth)) continue;
    points.push_back(it->second->position);
    pixels.push_back(o.pixel);
  }
  const int p = static_cast<int>(points.size());
  if (p < cfg.min_observations) {
    throw Error(ErrorCode::InsufficientObservations,
                std::to_string(p) + " matched tracks, need " + std::to_string(cfg.min_observations));
  }

  const PoseModel model{points, pixels, k};
  const auto outcome = solve_robust<6>(init, model, cfg);

  Linearization<6> lin;
  model.linearize(outcome.state, lin, true);
  GeometricEstimate out;
  out.track_count = p;
  out.iterations = outcome.iterations;
  out.cost_trace = outcome.costs;
  for (const auto& e : lin.residuals) out.residual_sum += e.squaredNorm();
  out.residual_variance = out.residual_sum / (2.0 * p - 1.0);
  if (out.residual_variance < kMinResidualVariance) {
    out.residual_variance = kMinResidualVariance;
    out.residual_floored = true;
  }

  Matrix6d info = Matrix6d::Zero();
  for (int j = 0; j < p; ++j) {
    const double w = huber_weight(lin.residuals[j].norm(), cfg.huber_delta);
    info.noalias() += w * lin.jacobians[j].transpose() * lin.jacobians[j];
  }
  info /= out.residual_variance;
  info = 0.5 * (info + info.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix6d> eig(info);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw Error(ErrorCode::SingularInformation, "pose information matrix is singular or ill-conditioned");
  }
  Covariance6 cov = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                    eig.eigenvectors().transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();

  out.estimate.pose = outcome.state;
  out.estimate.covariance = cov;
  out.estimate.source = EstimateSource::Geometric;
  out.estimate.frame_id = frame_id;
  out.sigmas = isometric_sigmas(cov);
  return out;
}

}  // namespace geoloc

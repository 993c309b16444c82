#include "geoloc/motion_fusion.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "geoloc/error.hpp"

namespace geoloc {

namespace {

constexpr int kMaxIterations = 50;
constexpr double kStepTolerance = 1e-12;
constexpr double kGateSigmas = 3.0;

using Matrix12d = Eigen::Matrix<double, 12, 12>;
using Vector12d = Eigen::Matrix<double, 12, 1>;

// Residual of the j-th newest pose (j >= 1) against anchor * exp((j-1) eta).
Twist motion_residual(const Pose& pose, const Pose& anchor, const Twist& eta, int j) {
  return log_se3(exp_se3(-(j - 1) * eta) * anchor.inverse() * pose);
}

double objective(std::span<const Pose> history, const Pose& anchor, const Twist& eta) {
  const int t = static_cast<int>(history.size());
  double sum = 0.0;
  for (int j = 1; j <= t; ++j) sum += motion_residual(history[t - j], anchor, eta, j).squaredNorm();
  return sum;
}

}  // namespace

MotionWindow::MotionWindow(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw Error(ErrorCode::InvalidArgument, "motion window capacity must be >= 1");
}

void MotionWindow::push(const PoseEstimate& estimate) {
  if (!history_.empty() && estimate.frame_id <= history_.back().frame_id) {
    throw Error(ErrorCode::InvalidArgument, "motion window frame ids must increase");
  }
  history_.push_back(estimate);
  while (static_cast<int>(history_.size()) > capacity_) history_.pop_front();
}

double motion_objective(std::span<const Pose> history, const Pose& anchor, const Pose& step) {
  return objective(history, anchor, log_se3(step));
}

MotionPrediction fit_motion_model(std::span<const Pose> history, FrameId next_frame_id) {
  const int t = static_cast<int>(history.size());
  if (t < 2) throw Error(ErrorCode::InsufficientHistory, "motion model needs at least 2 poses");

  Pose anchor = history[t - 1];
  Twist eta = log_se3(history[t - 1].inverse() * history[t - 2]);
  double cost = objective(history, anchor, eta);

  bool converged = false;
  for (int iter = 0; iter < kMaxIterations && !converged; ++iter) {
    Matrix12d h = Matrix12d::Zero();
    Vector12d g = Vector12d::Zero();
    for (int j = 1; j <= t; ++j) {
      const Twist r = motion_residual(history[t - j], anchor, eta, j);
      const double c = j - 1;
      const Matrix6d jl_inv = se3_left_jacobian_inverse(r);
      Eigen::Matrix<double, 6, 12> jac;
      jac.leftCols<6>() = -jl_inv * adjoint(exp_se3(-c * eta));
      jac.rightCols<6>() = -c * jl_inv * se3_left_jacobian(-c * eta);
      h.noalias() += jac.transpose() * jac;
      g.noalias() += jac.transpose() * r;
    }
    Vector12d step = -h.ldlt().solve(g);
    if (!step.allFinite()) throw Error(ErrorCode::NoConvergence, "motion model normal equations are singular");

    // Backtrack on the rare overshoot of an undamped step.
    for (int halving = 0; halving < 30; ++halving) {
      const Pose a = anchor * exp_se3(step.head<6>());
      const Twist e = eta + step.tail<6>();
      const double c = objective(history, a, e);
      if (c <= cost || step.norm() < kStepTolerance) {
        anchor = a;
        eta = e;
        cost = c;
        break;
      }
      step *= 0.5;
    }
    converged = step.norm() < kStepTolerance || cost == 0.0;
  }
  if (!converged) throw Error(ErrorCode::NoConvergence, "motion model fit did not converge");

  MotionPrediction out;
  out.delta = exp_se3(eta);
  out.estimate.pose = anchor * exp_se3(-eta);
  out.estimate.source = EstimateSource::Motion;
  out.estimate.frame_id = next_frame_id;
  Vector6d sum_sq = Vector6d::Zero();
  for (int j = 1; j <= t; ++j) {
    const Twist r = motion_residual(history[t - j], anchor, eta, j);
    out.fit_residuals.push_back(r);
    sum_sq += r.cwiseProduct(r);
  }
  const Vector6d var = (sum_sq / std::max(t - 2, 1)).cwiseMax(kMotionVarianceFloor);
  out.estimate.covariance = var.asDiagonal();
  return out;
}

MotionPrediction fit_motion_model(const MotionWindow& window, FrameId next_frame_id) {
  std::vector<Pose> poses;
  poses.reserve(window.size());
  for (const auto& e : window.history()) poses.push_back(e.pose);
  MotionPrediction out = fit_motion_model(poses, next_frame_id);
  return out;
}

namespace {

Matrix6d information_of(const Covariance6& c, const char* which) {
  Eigen::LLT<Matrix6d> llt(0.5 * (c + c.transpose()));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularCovariance, std::string(which) + " covariance is not positive definite");
  }
  Matrix6d info = llt.solve(Matrix6d::Identity());
  if (!info.allFinite()) throw Error(ErrorCode::SingularCovariance, std::string(which) + " covariance is singular");
  return 0.5 * (info + info.transpose());
}

}  // namespace

double fusion_objective(const PoseEstimate& geo, const PoseEstimate& motion, const Pose& pose) {
  const Matrix6d info_g = information_of(geo.covariance, "geometric");
  const Matrix6d info_m = information_of(motion.covariance, "motion");
  const Twist eg = relative_twist(geo.pose, pose);
  const Twist em = relative_twist(motion.pose, pose);
  return em.dot(info_m * em) + eg.dot(info_g * eg);
}

PoseEstimate fuse(const PoseEstimate& geo, const PoseEstimate& motion) {
  const Matrix6d info_g = information_of(geo.covariance, "geometric");
  const Matrix6d info_m = information_of(motion.covariance, "motion");

  const auto objective_at = [&](const Pose& t) {
    const Twist eg = relative_twist(geo.pose, t);
    const Twist em = relative_twist(motion.pose, t);
    return em.dot(info_m * em) + eg.dot(info_g * eg);
  };

  Pose fused = geo.pose;
  double cost = objective_at(fused);
  Matrix6d h;
  bool converged = false;
  for (int iter = 0;; ++iter) {
    const Twist eg = relative_twist(geo.pose, fused);
    const Twist em = relative_twist(motion.pose, fused);
    // d/dxi log(T0^-1 T exp(xi)) = J_r^-1(e)
    const Matrix6d jg = se3_right_jacobian_inverse(eg);
    const Matrix6d jm = se3_right_jacobian_inverse(em);
    h = jm.transpose() * info_m * jm + jg.transpose() * info_g * jg;
    // The Jacobians above are evaluated at the optimum on the final pass.
    if (converged) break;
    if (iter == kMaxIterations) throw Error(ErrorCode::NoConvergence, "fusion did not converge");
    const Vector6d g = jm.transpose() * info_m * em + jg.transpose() * info_g * eg;
    Vector6d step = -h.ldlt().solve(g);
    if (!step.allFinite()) throw Error(ErrorCode::SingularCovariance, "fusion normal equations are singular");
    for (int halving = 0; halving < 30; ++halving) {
      const Pose candidate = fused * exp_se3(step);
      const double c = objective_at(candidate);
      if (c <= cost || step.norm() < kStepTolerance) {
        fused = candidate;
        cost = c;
        break;
      }
      step *= 0.5;
    }
    converged = step.norm() < kStepTolerance || cost == 0.0;
  }

  PoseEstimate out;
  out.pose = fused;
  Covariance6 cov = h.ldlt().solve(Matrix6d::Identity());
  out.covariance = 0.5 * (cov + cov.transpose());
  out.source = EstimateSource::Fused;
  out.frame_id = geo.frame_id;
  out.timestamp = geo.timestamp;
  return out;
}

PoseEstimate fuse(const GeometricEstimate& geo, const MotionPrediction& motion) {
  return fuse(geo.estimate, motion.estimate);
}

bool gate_rejects(const GeometricEstimate& geo, const MotionPrediction& motion) {
  const Pose& g = geo.estimate.pose;
  const Pose& m = motion.estimate.pose;
  const double dp = (g.position() - m.position()).norm();
  const double dtheta = misalignment_angle(g.rotation(), m.rotation());
  return dp > kGateSigmas * geo.sigmas.position || dtheta > kGateSigmas * geo.sigmas.rotation;
}

PoseEstimate gate_and_fuse(const std::optional<GeometricEstimate>& geo,
                           const std::optional<MotionPrediction>& motion) {
  if (!geo && !motion) throw Error(ErrorCode::NoInput, "neither a geometric nor a motion estimate");
  if (!motion) return geo->estimate;
  if (!geo) return motion->estimate;
  if (gate_rejects(*geo, *motion)) {
    PoseEstimate out = motion->estimate;
    out.frame_id = geo->estimate.frame_id;
    out.timestamp = geo->estimate.timestamp;
    return out;
  }
  return fuse(*geo, *motion);
}

}  // namespace geoloc

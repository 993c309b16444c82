#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "geoloc/geo_locator.hpp"
#include "geoloc/scene.hpp"

namespace geoloc {

/// Sliding window of the most recent output estimates of one sequence.
class MotionWindow {
 public:
  explicit MotionWindow(int capacity = 4);

  int capacity() const { return capacity_; }
  std::size_t size() const { return history_.size(); }
  bool empty() const { return history_.empty(); }
  /// Oldest first.
  const std::deque<PoseEstimate>& history() const { return history_; }

  /// Appends, evicting the oldest beyond capacity. Frame ids must increase.
  void push(const PoseEstimate& estimate);
  void clear() { history_.clear(); }

 private:
  int capacity_;
  std::deque<PoseEstimate> history_;
};

struct MotionPrediction {
  PoseEstimate estimate;           // source = Motion
  Pose delta;                      // fitted per-frame step, backward in time
  std::vector<Twist> fit_residuals;  // newest frame first
};

/// Per-entry floor of the motion covariance diagonal.
inline constexpr double kMotionVarianceFloor = 1e-8;

/// Fits an anchor A (at the newest frame) and constant step delta so that
/// A delta^(j-1) explains the j-th newest pose, and predicts A delta^-1 for
/// the next frame. Covariance is the diagonal residual variance with divisor
/// max(t - 2, 1). `next_frame_id` labels the prediction.
/// Throws InsufficientHistory (< 2 poses) and NoConvergence.
MotionPrediction fit_motion_model(const MotionWindow& window, FrameId next_frame_id);
MotionPrediction fit_motion_model(std::span<const Pose> history, FrameId next_frame_id);

/// Sum of squared log residuals of the constant-velocity model at (anchor,
/// step), history oldest first.
double motion_objective(std::span<const Pose> history, const Pose& anchor, const Pose& step);

/// Information-weighted fusion on SE(3), Gauss-Newton from the geometric pose.
/// Throws SingularCovariance, NoConvergence.
PoseEstimate fuse(const GeometricEstimate& geo, const MotionPrediction& motion);
PoseEstimate fuse(const PoseEstimate& geo, const PoseEstimate& motion);

/// Value of the fusion objective at `pose`.
double fusion_objective(const PoseEstimate& geo, const PoseEstimate& motion, const Pose& pose);

/// 3-sigma check of the geometric estimate against the motion prediction,
/// using the geometric isometric sigmas.
bool gate_rejects(const GeometricEstimate& geo, const MotionPrediction& motion);

/// Passes a lone input through; otherwise returns the motion prediction when
/// the gate rejects the geometric estimate, else the fused estimate.
/// Throws NoInput when both are absent.
PoseEstimate gate_and_fuse(const std::optional<GeometricEstimate>& geo,
                           const std::optional<MotionPrediction>& motion);

}  // namespace geoloc

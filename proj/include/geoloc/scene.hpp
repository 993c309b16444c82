#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "geoloc/camera.hpp"
#include "geoloc/lie.hpp"

namespace geoloc {

using FrameId = std::int64_t;
using PointId = std::int64_t;

struct Frame {
  FrameId id = 0;
  std::optional<double> timestamp;
  /// Present for training frames (and for queries when ground truth is known).
  std::optional<Pose> label_pose;
  std::optional<std::vector<float>> descriptor;
};

/// 2D track of map point `point_id` on frame `frame_id`.
struct Observation {
  FrameId frame_id = 0;
  PointId point_id = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

struct MapPoint {
  PointId point_id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::vector<Observation> observations;
  /// Mean reprojection error norm over `observations`, pixels.
  double mean_residual = 0.0;
};

enum class EstimateSource { Geometric, Motion, Fused };

std::string_view to_string(EstimateSource source);
EstimateSource parse_source(std::string_view text);

struct PoseEstimate {
  Pose pose;
  Covariance6 covariance = Covariance6::Zero();
  EstimateSource source = EstimateSource::Geometric;
  FrameId frame_id = 0;
  double timestamp = 0.0;
};

/// True when `c` is symmetric and has no eigenvalue below -tol.
bool is_psd(const Covariance6& c, double tol = 1e-9);

}  // namespace geoloc

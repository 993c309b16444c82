#pragma once

#include <span>
#include <vector>

#include "geoloc/scene.hpp"

namespace geoloc {

/// Median of a non-empty sample; the mean of the two middle values for even
/// counts. Throws EmptyInput.
double median(std::vector<double> values);

struct ErrorSummary {
  std::size_t frames = 0;
  double median_position = 0.0;  // meters
  double median_angle = 0.0;     // radians
  std::vector<double> position_errors;
  std::vector<double> angle_errors;
};

/// Pairs frames by position in the lists. Both lists must have the same
/// length, ids and timestamps (within 1e-6 s) and carry poses. Throws
/// DimensionMismatch, InvalidArgument, MissingPose, EmptyInput.
ErrorSummary compare_trajectories(std::span<const Frame> predicted, std::span<const Frame> ground_truth);

}  // namespace geoloc

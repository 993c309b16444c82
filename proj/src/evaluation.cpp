#include "geoloc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geoloc/error.hpp"

namespace geoloc {

namespace {
constexpr double kTimestampTolerance = 1e-6;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

ErrorSummary compare_trajectories(std::span<const Frame> predicted, std::span<const Frame> ground_truth) {
  if (predicted.size() != ground_truth.size()) {
    throw Error(ErrorCode::DimensionMismatch, "prediction has " + std::to_string(predicted.size()) +
                                                  " frames, ground truth " + std::to_string(ground_truth.size()));
  }
  if (predicted.empty()) throw Error(ErrorCode::EmptyInput, "no frames to compare");
  ErrorSummary out;
  out.frames = predicted.size();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const Frame& p = predicted[i];
    const Frame& g = ground_truth[i];
    if (p.id != g.id) {
      throw Error(ErrorCode::InvalidArgument,
                  "frame id mismatch at row " + std::to_string(i) + ": " + std::to_string(p.id) + " vs " +
                      std::to_string(g.id));
    }
    if (p.timestamp.has_value() != g.timestamp.has_value() ||
        (p.timestamp && std::abs(*p.timestamp - *g.timestamp) > kTimestampTolerance)) {
      throw Error(ErrorCode::InvalidArgument, "timestamp mismatch at frame " + std::to_string(p.id));
    }
    if (!p.label_pose || !g.label_pose) {
      throw Error(ErrorCode::MissingPose, "frame " + std::to_string(p.id) + " has no pose");
    }
    out.position_errors.push_back((p.label_pose->position() - g.label_pose->position()).norm());
    out.angle_errors.push_back(misalignment_angle(p.label_pose->rotation(), g.label_pose->rotation()));
  }
  out.median_position = median(out.position_errors);
  out.median_angle = median(out.angle_errors);
  return out;
}

}  // namespace geoloc

#pragma once

#include <span>
#include <vector>

#include "geoloc/scene.hpp"

namespace geoloc {

struct KeyframeConfig {
  double optimal_baseline = 0.1;     // meters
  double baseline_stddev = 0.2;      // meters
  double angle_threshold = 0.05235987755982988;  // radians (3 degrees)
  int search_range = 100;            // frames
  int group_size = 7;                // seed plus (group_size - 1) / 2 per direction

  /// Throws InvalidArgument.
  void validate() const;
};

/// Co-visibility score: a Gaussian on baseline around the optimal baseline,
/// times max(alpha_m / angle, 1) with the angle clamped below at 1e-6 rad.
double keyframe_score(const Pose& a, const Pose& b, const KeyframeConfig& cfg);

/// Greedy bidirectional keyframe search around `seed_id`. `training` must be
/// ordered by sequence index and carry label poses. Returns ids sorted by
/// sequence index. Throws UnknownSeed.
std::vector<FrameId> select_keyframes(std::span<const Frame> training, FrameId seed_id,
                                      const KeyframeConfig& cfg);

}  // namespace geoloc

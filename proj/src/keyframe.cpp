#include "geoloc/keyframe.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geoloc/error.hpp"

namespace geoloc {

namespace {

constexpr double kMinScoreAngle = 1e-6;

}  // namespace

void KeyframeConfig::validate() const {
  if (!(optimal_baseline > 0.0) || !(baseline_stddev > 0.0) || !(angle_threshold > 0.0) ||
      search_range <= 0 || group_size < 3 || group_size % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "keyframe config needs positive values and an odd group size >= 3");
  }
}

double keyframe_score(const Pose& a, const Pose& b, const KeyframeConfig& cfg) {
  const double baseline = (a.position() - b.position()).norm();
  const double z = (baseline - cfg.optimal_baseline) / cfg.baseline_stddev;
  const double angle = std::max(misalignment_angle(a.rotation(), b.rotation()), kMinScoreAngle);
  return std::exp(-z * z) * std::max(cfg.angle_threshold / angle, 1.0);
}

std::vector<FrameId> select_keyframes(std::span<const Frame> training, FrameId seed_id,
                                      const KeyframeConfig& cfg) {
  cfg.validate();
  const auto seed_it =
      std::find_if(training.begin(), training.end(), [&](const Frame& f) { return f.id == seed_id; });
  if (seed_it == training.end()) {
    throw Error(ErrorCode::UnknownSeed, "seed frame " + std::to_string(seed_id) + " not in training set");
  }
  const auto pose_of = [&](std::ptrdiff_t i) -> const Pose& {
    const auto& p = training[static_cast<std::size_t>(i)].label_pose;
    if (!p) throw Error(ErrorCode::MissingPose, "training frame without pose");
    return *p;
  };

  const auto n = static_cast<std::ptrdiff_t>(training.size());
  const std::ptrdiff_t seed = seed_it - training.begin();
  const int per_side = (cfg.group_size - 1) / 2;

  // Best-scoring frame against `anchor` over indices [lo, hi); ties keep the
  // earliest index.
  const auto best_in = [&](std::ptrdiff_t anchor, std::ptrdiff_t lo, std::ptrdiff_t hi) {
    std::ptrdiff_t best = -1;
    double best_score = -1.0;
    for (std::ptrdiff_t c = lo; c < hi; ++c) {
      const double s = keyframe_score(pose_of(anchor), pose_of(c), cfg);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    return best;
  };

  std::vector<std::ptrdiff_t> picked = {seed};
  std::ptrdiff_t back = seed;
  std::ptrdiff_t fwd = seed;
  int back_steps = 0;
  int fwd_steps = 0;
  bool back_open = true;
  bool fwd_open = true;
  while (back_open || fwd_open) {
    if (back_open) {
      if (back_steps == per_side || back == 0) {
        back_open = false;
      } else {
        back = best_in(back, std::max<std::ptrdiff_t>(0, back - cfg.search_range), back);
        picked.push_back(back);
        ++back_steps;
      }
    }
    if (fwd_open) {
      if (fwd_steps == per_side || fwd == n - 1) {
        fwd_open = false;
      } else {
        fwd = best_in(fwd, fwd + 1, std::min<std::ptrdiff_t>(n, fwd + 1 + cfg.search_range));
        picked.push_back(fwd);
        ++fwd_steps;
      }
    }
  }
  std::sort(picked.begin(), picked.end());
  std::vector<FrameId> ids;
  ids.reserve(picked.size());
  for (auto i : picked) ids.push_back(training[static_cast<std::size_t>(i)].id);
  return ids;
}

}  // namespace geoloc

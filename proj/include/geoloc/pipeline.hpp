#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoloc/geo_locator.hpp"
#include "geoloc/keyframe.hpp"
#include "geoloc/motion_fusion.hpp"
#include "geoloc/retrieval.hpp"
#include "geoloc/scene.hpp"

namespace geoloc {

struct PipelineConfig {
  KeyframeConfig keyframe;
  SolverConfig solver;
  int motion_window = 4;
  /// Queries at the start of a sequence that use the geometric locator alone.
  int bootstrap_frames = 4;

  void validate() const;
};

/// Pose-labeled training frames (ordered by sequence index) with their tracks.
struct TrainingData {
  std::vector<Frame> frames;
  std::vector<Observation> observations;
  Intrinsics intrinsics{1.0, 1.0, 0.0, 0.0};
};

/// Per-sequence state: the motion window plus how many queries it has seen.
struct SequenceState {
  explicit SequenceState(int window_capacity = 4) : window(window_capacity) {}
  MotionWindow window;
  int processed = 0;
};

struct QueryResult {
  PoseEstimate estimate;
  /// Set when the geometric locator failed and the motion prediction was used.
  bool degraded = false;
  /// Set when the 3-sigma gate discarded the geometric estimate.
  bool gated = false;
  FrameId retrieved = 0;
  std::vector<FrameId> keyframes;
  std::optional<GeometricEstimate> geometric;
  std::optional<MotionPrediction> motion;
  std::string geometric_error;
};

/// Retrieval, keyframe selection, forward and backward intersection, motion
/// prediction and gated fusion for one query sequence at a time.
class Localizer {
 public:
  Localizer(TrainingData training, RetrievalBackend backend, PipelineConfig cfg);

  const PipelineConfig& config() const { return cfg_; }
  const TrainingData& training() const { return training_; }

  /// Localizes one query and appends the result to `state`. Throws
  /// LocalizationFailure (message names the frame) when neither the
  /// geometric locator nor the motion model produces an estimate.
  QueryResult localize(const Frame& query, std::span<const Observation> query_tracks, SequenceState& state);

  /// Runs a whole sequence with fresh state. `tracks` may hold observations
  /// of every query; each query gets those with its frame id.
  std::vector<QueryResult> localize_sequence(std::span<const Frame> queries,
                                             std::span<const Observation> tracks);

 private:
  const TriangulationResult& triangulate(const std::vector<FrameId>& keyframes);

  TrainingData training_;
  RetrievalBackend backend_;
  PipelineConfig cfg_;
  std::map<std::vector<FrameId>, TriangulationResult> cache_;
};

}  // namespace geoloc

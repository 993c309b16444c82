#include "geoloc/pipeline.hpp"

#include <algorithm>
#include <unordered_map>

#include "geoloc/error.hpp"

namespace geoloc {

void PipelineConfig::validate() const {
  keyframe.validate();
  solver.validate();
  if (motion_window < 2) throw Error(ErrorCode::InvalidArgument, "motion window must hold >= 2 poses");
  if (bootstrap_frames < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap_frames must be >= 1");
}

Localizer::Localizer(TrainingData training, RetrievalBackend backend, PipelineConfig cfg)
    : training_(std::move(training)), backend_(std::move(backend)), cfg_(cfg) {
  cfg_.validate();
  if (training_.frames.empty()) throw Error(ErrorCode::EmptyInput, "no training frames");
  for (const Frame& f : training_.frames) {
    if (!f.label_pose) throw Error(ErrorCode::MissingPose, "training frame " + std::to_string(f.id) + " has no pose");
  }
}

const TriangulationResult& Localizer::triangulate(const std::vector<FrameId>& keyframes) {
  if (auto it = cache_.find(keyframes); it != cache_.end()) return it->second;
  std::vector<Frame> frames;
  for (FrameId id : keyframes) {
    const auto it = std::find_if(training_.frames.begin(), training_.frames.end(),
                                 [&](const Frame& f) { return f.id == id; });
    frames.push_back(*it);
  }
  auto result = forward_intersection(frames, training_.observations, training_.intrinsics, cfg_.solver);
  return cache_.emplace(keyframes, std::move(result)).first->second;
}

QueryResult Localizer::localize(const Frame& query, std::span<const Observation> query_tracks,
                                SequenceState& state) {
  QueryResult out;
  const double timestamp = query.timestamp.value_or(static_cast<double>(query.id));

  // Motion branch runs alongside the geometric one once the window allows it.
  const bool bootstrapping = state.processed < cfg_.bootstrap_frames;
  if (state.window.size() >= 2) {
    try {
      out.motion = fit_motion_model(state.window, query.id);
      out.motion->estimate.timestamp = timestamp;
    } catch (const Error&) {
      out.motion.reset();
    }
  }

  try {
    out.retrieved = query_most_similar(backend_, query);
    out.keyframes = select_keyframes(training_.frames, out.retrieved, cfg_.keyframe);
    const TriangulationResult& tri = triangulate(out.keyframes);
    const auto seed = std::find_if(training_.frames.begin(), training_.frames.end(),
                                   [&](const Frame& f) { return f.id == out.retrieved; });
    out.geometric = backward_intersection(tri.map_points, query_tracks, training_.intrinsics,
                                          *seed->label_pose, cfg_.solver);
    out.geometric->estimate.frame_id = query.id;
    out.geometric->estimate.timestamp = timestamp;
  } catch (const Error& e) {
    // Retrieval errors mean the inputs are unusable, not that the geometry failed.
    if (e.code() == ErrorCode::MissingPose || e.code() == ErrorCode::MissingDescriptor) throw;
    out.geometric_error = e.what();
    out.geometric.reset();
  }

  if (!out.geometric) {
    if (!out.motion) {
      throw Error(ErrorCode::LocalizationFailure,
                  "frame " + std::to_string(query.id) + ": " + out.geometric_error);
    }
    out.estimate = out.motion->estimate;
    out.degraded = true;
  } else if (bootstrapping || !out.motion) {
    out.estimate = out.geometric->estimate;
  } else {
    out.gated = gate_rejects(*out.geometric, *out.motion);
    out.estimate = gate_and_fuse(out.geometric, out.motion);
  }
  out.estimate.frame_id = query.id;
  out.estimate.timestamp = timestamp;

  state.window.push(out.estimate);
  ++state.processed;
  return out;
}

std::vector<QueryResult> Localizer::localize_sequence(std::span<const Frame> queries,
                                                      std::span<const Observation> tracks) {
  std::unordered_map<FrameId, std::vector<Observation>> by_frame;
  for (const Observation& o : tracks) by_frame[o.frame_id].push_back(o);
  SequenceState state(cfg_.motion_window);
  std::vector<QueryResult> results;
  results.reserve(queries.size());
  for (const Frame& q : queries) {
    const auto it = by_frame.find(q.id);
    const std::span<const Observation> obs =
        it == by_frame.end() ? std::span<const Observation>() : std::span<const Observation>(it->second);
    results.push_back(localize(q, obs, state));
  }
  return results;
}

}  // namespace geoloc

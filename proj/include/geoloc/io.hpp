#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "geoloc/scene.hpp"

namespace geoloc {

/// Trajectory lines: "timestamp tx ty tz qx qy qz qw", whitespace separated,
/// '#' starts a comment. Frames come back sorted by timestamp with ids equal
/// to their index in that order.
std::vector<Frame> load_trajectory(const std::filesystem::path& path);
/// Writes frames that carry a label pose; frames without one are skipped.
void save_trajectory(const std::filesystem::path& path, std::span<const Frame> frames);

/// CSV with header "frame_id,point_id,u,v".
std::vector<Observation> load_tracks(const std::filesystem::path& path);
void save_tracks(const std::filesystem::path& path, std::span<const Observation> tracks);

/// Either four whitespace-separated numbers "fx fy cx cy" or "key: value"
/// lines with keys fx, fy, cx, cy and optional width, height.
Intrinsics load_intrinsics(const std::filesystem::path& path);
void save_intrinsics(const std::filesystem::path& path, const Intrinsics& k);

struct DescriptorRecord {
  FrameId frame_id = 0;
  std::vector<float> values;
};

/// Little-endian "GLDC" v1: u32 version, u32 count, u32 dim, then count
/// records of (u64 frame_id, dim x f32).
std::vector<DescriptorRecord> load_descriptors(const std::filesystem::path& path);
void save_descriptors(const std::filesystem::path& path, std::span<const DescriptorRecord> records);

/// Path of the covariance JSON written next to a trajectory by save_estimates.
std::filesystem::path estimates_json_path(const std::filesystem::path& trajectory_path);

/// Writes the trajectory lines to `path` and per-frame covariance, source and
/// isometric sigmas to estimates_json_path(path).
void save_estimates(const std::filesystem::path& path, std::span<const PoseEstimate> estimates);
/// Reads back what save_estimates wrote.
std::vector<PoseEstimate> load_estimates(const std::filesystem::path& path);

}  // namespace geoloc

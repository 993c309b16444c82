#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoloc/geo_locator.hpp"
#include "geoloc/rng.hpp"
#include "geoloc/scene.hpp"

namespace geoloc {

/// Layout of the Monte-Carlo scene. Points fill a box (width x height x
/// depth range) in front of an arc of training cameras aimed at the box
/// centroid; the query camera sits between the two middle training cameras.
struct SceneSpec {
  int point_count = 119;
  int camera_count = 4;
  std::uint64_t seed = 0;
  double camera_spacing = 0.1;        // meters along the arc
  double box_width = 4.0;             // meters, camera x
  double box_height = 2.0;            // meters, camera y
  double near_depth = 2.0;            // meters
  double far_depth = 6.0;             // meters
  double query_position_jitter = 0.02;  // meters per axis
  double query_rotation_jitter = 0.017453292519943295;  // radians (1 degree)
  double focal_length = 500.0;        // pixels
  int image_width = 640;
  int image_height = 480;
  double min_visible_fraction = 0.6;
};

struct SyntheticScene {
  std::vector<Eigen::Vector3d> map_points;  // index = point id
  std::vector<Pose> training_poses;         // frame ids 0 .. n-1
  Pose query_pose;                          // ground truth, frame id n
  Intrinsics intrinsics{1.0, 1.0, 0.0, 0.0};
  int image_width = 0;
  int image_height = 0;
  std::vector<Observation> visibility;      // noise-free projections

  FrameId query_frame_id() const { return static_cast<FrameId>(training_poses.size()); }
};

/// Throws InvalidArgument on bad counts, GenerationFailure after 100
/// rejected layouts.
SyntheticScene generate_scene(const SceneSpec& spec);
SyntheticScene generate_scene(int point_count, int camera_count, std::uint64_t seed);

struct NoiseSpec {
  double pixel_sigma = 1.0;       // pixels, per image axis
  double label_pos_sigma = 0.0;   // meters, per axis
  double label_rot_sigma = 0.0;   // radians, angle about a uniform random axis
  std::uint64_t rng_seed = 0;
};

/// Isometric label perturbation: i.i.d. Gaussian per translation axis, and a
/// rotation about a uniform random axis by a Gaussian angle.
Pose perturb_pose(const Pose& pose, double pos_sigma, double rot_sigma, Rng& rng);

struct TrialRecord {
  int index = 0;
  bool solved = false;
  std::string failure;  // error text when !solved
  double position_error = 0.0;  // meters
  double angular_error = 0.0;   // radians
  double sigma_p = 0.0;
  double sigma_r = 0.0;
  bool position_covered = false;
  bool angular_covered = false;
  int map_points = 0;
  int tracks = 0;
};

struct CoverageReport {
  int trials = 0;
  int failures = 0;
  /// Solved trials whose residual variance hit the floor (zero-noise data);
  /// coverage is not meaningful for them.
  int zero_sigma_trials = 0;
  double angular_coverage = 0.0;
  double positional_coverage = 0.0;
  std::vector<TrialRecord> per_trial;
  nlohmann::json config;
};

/// Coverage of the 1.96-sigma isometric intervals of the geometric locator,
/// with fresh pixel and label noise every trial. Trials are independent
/// (stream k of the noise seed) and may run on `threads` workers; the report
/// does not depend on the thread count.
CoverageReport run_coverage_experiment(const SceneSpec& scene_spec, const NoiseSpec& noise, int trials,
                                       const SolverConfig& solver = {}, int threads = 1);

nlohmann::json to_json(const CoverageReport& report);

enum class MotionKind { ConstantVelocity, Piecewise, RandomWalk };

std::string_view to_string(MotionKind kind);
/// Accepts constant_velocity, piecewise, random_walk. Throws InvalidArgument.
MotionKind parse_motion_kind(std::string_view text);

/// A camera sweeping sideways past a field of points. Training frames sit at
/// integer steps of the trajectory; queries are the held-out half steps of
/// the final `query_fraction` of it, so they never coincide with a training
/// frame.
struct SequenceSpec {
  int length = 50;  // training frames
  MotionKind motion = MotionKind::ConstantVelocity;
  std::uint64_t seed = 0;
  double pixel_sigma = 0.5;       // pixels, added to every track
  double speed = 0.05;            // meters per frame
  double yaw_rate = 0.002;        // radians per frame
  int points_per_frame = 15;
  double query_fraction = 0.4;
  double focal_length = 500.0;
  int image_width = 640;
  int image_height = 480;
};

struct SequenceBundle {
  std::vector<Frame> training;          // ids 0..length-1, label poses and descriptors set
  std::vector<Observation> training_tracks;
  std::vector<Frame> queries;           // ids 0..q-1, ground-truth poses and descriptors set
  std::vector<Observation> query_tracks;
  Intrinsics intrinsics{1.0, 1.0, 0.0, 0.0};
  std::vector<Eigen::Vector3d> points;  // index = point id
};

/// Throws InvalidArgument (length < 10), GenerationFailure.
SequenceBundle generate_sequence(const SequenceSpec& spec);

/// File names inside a generated bundle directory.
struct SequenceFiles {
  static constexpr std::string_view training_trajectory = "train.traj";
  static constexpr std::string_view training_tracks = "tracks.csv";
  static constexpr std::string_view query_trajectory = "queries.traj";
  static constexpr std::string_view query_tracks = "query_tracks.csv";
  static constexpr std::string_view intrinsics = "intrinsics.txt";
  static constexpr std::string_view training_descriptors = "train.gldc";
  static constexpr std::string_view query_descriptors = "queries.gldc";
};

/// Stand-in appearance descriptor for synthetic frames: position and scaled
/// rotation vector, so Euclidean neighbors are pose neighbors.
std::vector<float> synthetic_descriptor(const Pose& pose);

/// Writes the bundle in the scene-model formats. Creates `dir`.
void write_sequence(const SequenceBundle& bundle, const std::filesystem::path& dir);

}  // namespace geoloc

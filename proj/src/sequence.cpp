#include <cmath>
#include <string>

#include "geoloc/error.hpp"
#include "geoloc/io.hpp"
#include "geoloc/sim.hpp"

namespace geoloc {

namespace {

constexpr double kFramePeriod = 0.1;  // seconds
constexpr int kPiecewiseSegment = 10;
constexpr int kMinQueryTracks = 20;
constexpr double kMinVisibleDepth = 0.1;
constexpr std::uint64_t kTrajectoryStream = 1;
constexpr std::uint64_t kPointStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr double kDescriptorRotationScale = 1.0;  // meters per radian

std::vector<Twist> step_twists(const SequenceSpec& spec, Rng& rng) {
  Twist base;
  base << spec.speed, 0.0, 0.0, 0.0, spec.yaw_rate, 0.0;
  std::vector<Twist> steps(static_cast<std::size_t>(spec.length));
  Twist segment = base;
  for (int k = 0; k < spec.length; ++k) {
    switch (spec.motion) {
      case MotionKind::ConstantVelocity:
        steps[k] = base;
        break;
      case MotionKind::Piecewise:
        if (k % kPiecewiseSegment == 0) {
          segment << spec.speed * rng.uniform(0.6, 1.4), spec.speed * rng.uniform(-0.2, 0.2),
              spec.speed * rng.uniform(-0.2, 0.2), rng.uniform(-0.002, 0.002),
              spec.yaw_rate * rng.uniform(-2.0, 2.0), rng.uniform(-0.002, 0.002);
        }
        steps[k] = segment;
        break;
      case MotionKind::RandomWalk: {
        Twist jitter;
        jitter << rng.normal(0.0, 0.01), rng.normal(0.0, 0.005), rng.normal(0.0, 0.005),
            rng.normal(0.0, 0.002), rng.normal(0.0, 0.003), rng.normal(0.0, 0.002);
        steps[k] = base + jitter;
        break;
      }
    }
  }
  return steps;
}

bool in_image(const Pose& pose, const Eigen::Vector3d& x, const Intrinsics& k, int width, int height) {
  if (!(pose.inverse_transform(x).z() > kMinVisibleDepth)) return false;
  const Eigen::Vector2d px = project(pose, x, k);
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() < width && px.y() < height;
}

}  // namespace

std::string_view to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::ConstantVelocity:
      return "constant_velocity";
    case MotionKind::Piecewise:
      return "piecewise";
    case MotionKind::RandomWalk:
      return "random_walk";
  }
  return "unknown";
}

std::vector<float> synthetic_descriptor(const Pose& pose) {
  const Eigen::Vector3d r = kDescriptorRotationScale * log_so3(pose.rotation());
  const Eigen::Vector3d& p = pose.position();
  return {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()),
          static_cast<float>(r.x()), static_cast<float>(r.y()), static_cast<float>(r.z())};
}

MotionKind parse_motion_kind(std::string_view text) {
  if (text == "constant_velocity") return MotionKind::ConstantVelocity;
  if (text == "piecewise") return MotionKind::Piecewise;
  if (text == "random_walk") return MotionKind::RandomWalk;
  throw Error(ErrorCode::InvalidArgument, "unknown motion kind '" + std::string(text) + "'");
}

SequenceBundle generate_sequence(const SequenceSpec& spec) {
  if (spec.length < 10) throw Error(ErrorCode::InvalidArgument, "sequence length must be >= 10");
  if (spec.points_per_frame < 1 || !(spec.query_fraction > 0.0) || spec.query_fraction >= 1.0 ||
      spec.pixel_sigma < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "invalid sequence spec");
  }

  SequenceBundle out;
  out.intrinsics = Intrinsics(spec.focal_length, spec.focal_length, 0.5 * spec.image_width,
                              0.5 * spec.image_height);
  out.intrinsics.set_image_size(spec.image_width, spec.image_height);

  Rng trajectory_rng(spec.seed, kTrajectoryStream);
  const std::vector<Twist> steps = step_twists(spec, trajectory_rng);
  std::vector<Pose> keyposes(static_cast<std::size_t>(spec.length));
  keyposes[0] = Pose::identity();
  for (int k = 1; k < spec.length; ++k) keyposes[k] = keyposes[k - 1] * exp_se3(steps[k - 1]);

  for (int k = 0; k < spec.length; ++k) {
    Frame f;
    f.id = k;
    f.timestamp = k * kFramePeriod;
    f.label_pose = keyposes[k];
    f.descriptor = synthetic_descriptor(keyposes[k]);
    out.training.push_back(std::move(f));
  }
  const int first_query = static_cast<int>(std::floor((1.0 - spec.query_fraction) * spec.length));
  for (int k = first_query; k + 1 < spec.length; ++k) {
    Frame q;
    q.id = static_cast<FrameId>(out.queries.size());
    q.timestamp = (k + 0.5) * kFramePeriod;
    q.label_pose = keyposes[k] * exp_se3(0.5 * steps[k]);
    q.descriptor = synthetic_descriptor(*q.label_pose);
    out.queries.push_back(std::move(q));
  }
  if (out.queries.empty()) throw Error(ErrorCode::GenerationFailure, "no query frames in the tail");

  // Points are seeded inside each training frame's view so every part of the
  // trajectory sees structure.
  Rng point_rng(spec.seed, kPointStream);
  for (const Pose& pose : keyposes) {
    for (int i = 0; i < spec.points_per_frame; ++i) {
      const Eigen::Vector2d px(point_rng.uniform(0.05, 0.95) * spec.image_width,
                               point_rng.uniform(0.05, 0.95) * spec.image_height);
      const double depth = point_rng.uniform(2.0, 6.0);
      out.points.push_back(pose.transform(out.intrinsics.back_project(px) * depth));
    }
  }

  Rng noise_rng(spec.seed, kNoiseStream);
  const auto observe = [&](const std::vector<Frame>& frames, std::vector<Observation>& tracks) {
    for (const Frame& f : frames) {
      for (std::size_t j = 0; j < out.points.size(); ++j) {
        if (!in_image(*f.label_pose, out.points[j], out.intrinsics, spec.image_width, spec.image_height)) continue;
        Eigen::Vector2d px = project(*f.label_pose, out.points[j], out.intrinsics);
        px += Eigen::Vector2d(noise_rng.normal(0.0, spec.pixel_sigma), noise_rng.normal(0.0, spec.pixel_sigma));
        tracks.push_back(Observation{f.id, static_cast<PointId>(j), px});
      }
    }
  };
  observe(out.training, out.training_tracks);
  observe(out.queries, out.query_tracks);

  std::vector<int> per_query(out.queries.size(), 0);
  for (const auto& o : out.query_tracks) ++per_query[static_cast<std::size_t>(o.frame_id)];
  for (std::size_t q = 0; q < per_query.size(); ++q) {
    if (per_query[q] < kMinQueryTracks) {
      throw Error(ErrorCode::GenerationFailure, "query " + std::to_string(q) + " sees too few points");
    }
  }
  return out;
}

void write_sequence(const SequenceBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  save_trajectory(dir / SequenceFiles::training_trajectory, bundle.training);
  save_tracks(dir / SequenceFiles::training_tracks, bundle.training_tracks);
  save_trajectory(dir / SequenceFiles::query_trajectory, bundle.queries);
  save_tracks(dir / SequenceFiles::query_tracks, bundle.query_tracks);
  save_intrinsics(dir / SequenceFiles::intrinsics, bundle.intrinsics);
  const auto records = [](const std::vector<Frame>& frames) {
    std::vector<DescriptorRecord> out;
    for (const Frame& f : frames) out.push_back(DescriptorRecord{f.id, f.descriptor.value_or(std::vector<float>{})});
    return out;
  };
  save_descriptors(dir / SequenceFiles::training_descriptors, records(bundle.training));
  save_descriptors(dir / SequenceFiles::query_descriptors, records(bundle.queries));
}

}  // namespace geoloc

#include "geoloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "geoloc/error.hpp"
#include "geoloc/retrieval.hpp"

namespace geoloc {

namespace {

constexpr int kMaxLayoutAttempts = 100;
constexpr int kMaxPointDraws = 10000;

// Stream ids; trial k uses kTrialStreamBase + k.
constexpr std::uint64_t kSceneStream = 0;
constexpr std::uint64_t kTrialStreamBase = 1000;

// Camera at `eye` looking at `target`, image y pointing along `down`.
Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& down) {
  const Eigen::Vector3d z = (target - eye).normalized();
  const Eigen::Vector3d x = down.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Pose(r, eye);
}

bool visible(const Pose& pose, const Eigen::Vector3d& x, const Intrinsics& k, int width, int height) {
  if (!(pose.inverse_transform(x).z() > 0.1)) return false;
  const Eigen::Vector2d px = project(pose, x, k);
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() < width && px.y() < height;
}

}  // namespace

SyntheticScene generate_scene(const SceneSpec& spec) {
  if (spec.point_count < 8) throw Error(ErrorCode::InvalidArgument, "point_count must be >= 8");
  if (spec.camera_count < 2) throw Error(ErrorCode::InvalidArgument, "camera_count must be >= 2");

  Rng rng(spec.seed, kSceneStream);
  const Intrinsics k(spec.focal_length, spec.focal_length, 0.5 * spec.image_width, 0.5 * spec.image_height);
  const double mid_depth = 0.5 * (spec.near_depth + spec.far_depth);
  const Eigen::Vector3d centroid(0.0, 0.0, mid_depth);
  const Eigen::Vector3d down = Eigen::Vector3d::UnitY();

  for (int attempt = 0; attempt < kMaxLayoutAttempts; ++attempt) {
    SyntheticScene scene;
    scene.intrinsics = k;
    scene.image_width = spec.image_width;
    scene.image_height = spec.image_height;

    // Arc of radius mid_depth around the centroid, in the x-z plane, cameras
    // at the origin end looking at the box.
    const double step = spec.camera_spacing / mid_depth;
    for (int i = 0; i < spec.camera_count; ++i) {
      const double a = (i - 0.5 * (spec.camera_count - 1)) * step;
      const Eigen::Vector3d eye = centroid + mid_depth * Eigen::Vector3d(std::sin(a), 0.0, -std::cos(a));
      scene.training_poses.push_back(look_at(eye, centroid, down));
    }
    {
      const Eigen::Vector3d eye(rng.normal(0.0, spec.query_position_jitter),
                                rng.normal(0.0, spec.query_position_jitter),
                                rng.normal(0.0, spec.query_position_jitter));
      const Pose aimed = look_at(eye, centroid, down);
      const Eigen::Vector3d axis = rng.unit_vector();
      scene.query_pose =
          Pose(aimed.rotation() * exp_so3(axis * rng.normal(0.0, spec.query_rotation_jitter)), eye);
    }

    // Points must be seen by the query and by at least two training cameras.
    bool ok = true;
    for (int j = 0; j < spec.point_count && ok; ++j) {
      bool placed = false;
      for (int draw = 0; draw < kMaxPointDraws; ++draw) {
        const Eigen::Vector3d x(rng.uniform(-0.5, 0.5) * spec.box_width,
                                rng.uniform(-0.5, 0.5) * spec.box_height,
                                rng.uniform(spec.near_depth, spec.far_depth));
        if (!visible(scene.query_pose, x, k, spec.image_width, spec.image_height)) continue;
        int seen = 0;
        for (const Pose& t : scene.training_poses) seen += visible(t, x, k, spec.image_width, spec.image_height);
        if (seen < 2) continue;
        scene.map_points.push_back(x);
        placed = true;
        break;
      }
      ok = placed;
    }
    if (!ok) continue;

    const auto all_poses = [&] {
      std::vector<Pose> poses = scene.training_poses;
      poses.push_back(scene.query_pose);
      return poses;
    }();
    for (std::size_t f = 0; f < all_poses.size() && ok; ++f) {
      int seen = 0;
      for (std::size_t j = 0; j < scene.map_points.size(); ++j) {
        const Eigen::Vector3d& x = scene.map_points[j];
        if (!visible(all_poses[f], x, k, spec.image_width, spec.image_height)) continue;
        ++seen;
        scene.visibility.push_back(
            Observation{static_cast<FrameId>(f), static_cast<PointId>(j), project(all_poses[f], x, k)});
      }
      ok = seen >= spec.min_visible_fraction * spec.point_count;
    }
    if (ok) return scene;
  }
  throw Error(ErrorCode::GenerationFailure, "no valid scene layout after 100 attempts");
}

SyntheticScene generate_scene(int point_count, int camera_count, std::uint64_t seed) {
  SceneSpec spec;
  spec.point_count = point_count;
  spec.camera_count = camera_count;
  spec.seed = seed;
  return generate_scene(spec);
}

Pose perturb_pose(const Pose& pose, double pos_sigma, double rot_sigma, Rng& rng) {
  const Eigen::Vector3d dp(rng.normal(0.0, pos_sigma), rng.normal(0.0, pos_sigma), rng.normal(0.0, pos_sigma));
  const Eigen::Vector3d axis = rng.unit_vector();
  const double angle = rng.normal(0.0, rot_sigma);
  return Pose(pose.rotation() * exp_so3(axis * angle), pose.position() + dp);
}

namespace {

TrialRecord run_trial(const SyntheticScene& scene, const NoiseSpec& noise, const SolverConfig& solver,
                      int index) {
  Rng rng(noise.rng_seed, kTrialStreamBase + static_cast<std::uint64_t>(index));
  TrialRecord rec;
  rec.index = index;

  std::vector<Frame> training(scene.training_poses.size());
  for (std::size_t i = 0; i < training.size(); ++i) {
    training[i].id = static_cast<FrameId>(i);
    training[i].label_pose =
        perturb_pose(scene.training_poses[i], noise.label_pos_sigma, noise.label_rot_sigma, rng);
  }
  std::vector<Observation> train_obs;
  std::vector<Observation> query_obs;
  for (Observation o : scene.visibility) {
    o.pixel += Eigen::Vector2d(rng.normal(0.0, noise.pixel_sigma), rng.normal(0.0, noise.pixel_sigma));
    (o.frame_id == scene.query_frame_id() ? query_obs : train_obs).push_back(o);
  }

  try {
    Frame query;
    query.id = scene.query_frame_id();
    query.label_pose = scene.query_pose;
    const FrameId retrieved = query_most_similar(PoseOracle{training, 1.0}, query);

    const auto tri = forward_intersection(training, train_obs, scene.intrinsics, solver);
    rec.map_points = static_cast<int>(tri.map_points.size());
    const auto geo = backward_intersection(tri.map_points, query_obs, scene.intrinsics,
                                           *training[static_cast<std::size_t>(retrieved)].label_pose, solver);
    rec.tracks = geo.track_count;
    rec.solved = true;
    const Pose& est = geo.estimate.pose;
    rec.position_error = (est.position() - scene.query_pose.position()).norm();
    rec.angular_error = misalignment_angle(est.rotation(), scene.query_pose.rotation());
    rec.sigma_p = geo.sigmas.position;
    rec.sigma_r = geo.sigmas.rotation;
    rec.position_covered = rec.position_error <= 1.96 * rec.sigma_p;
    rec.angular_covered = rec.angular_error <= 1.96 * rec.sigma_r;
    if (geo.residual_floored) rec.failure = "zero residual variance";
  } catch (const Error& e) {
    rec.solved = false;
    rec.failure = e.what();
  }
  return rec;
}

}  // namespace

CoverageReport run_coverage_experiment(const SceneSpec& scene_spec, const NoiseSpec& noise, int trials,
                                       const SolverConfig& solver, int threads) {
  if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  if (noise.pixel_sigma < 0.0 || noise.label_pos_sigma < 0.0 || noise.label_rot_sigma < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "noise sigmas must be non-negative");
  }
  solver.validate();
  const SyntheticScene scene = generate_scene(scene_spec);

  CoverageReport report;
  report.trials = trials;
  report.per_trial.resize(static_cast<std::size_t>(trials));
  threads = std::clamp(threads, 1, trials);
  if (threads == 1) {
    for (int i = 0; i < trials; ++i) report.per_trial[static_cast<std::size_t>(i)] = run_trial(scene, noise, solver, i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < trials; i += threads) {
          report.per_trial[static_cast<std::size_t>(i)] = run_trial(scene, noise, solver, i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  int counted = 0;
  int pos_in = 0;
  int ang_in = 0;
  for (const auto& rec : report.per_trial) {
    if (!rec.solved) {
      ++report.failures;
      continue;
    }
    if (!rec.failure.empty()) {
      ++report.zero_sigma_trials;
      continue;
    }
    ++counted;
    pos_in += rec.position_covered;
    ang_in += rec.angular_covered;
  }
  if (counted > 0) {
    report.positional_coverage = static_cast<double>(pos_in) / counted;
    report.angular_coverage = static_cast<double>(ang_in) / counted;
  }
  report.config = {{"point_count", scene_spec.point_count},
                   {"camera_count", scene_spec.camera_count},
                   {"scene_seed", scene_spec.seed},
                   {"pixel_sigma", noise.pixel_sigma},
                   {"label_noise_pos", noise.label_pos_sigma},
                   {"label_noise_rot_rad", noise.label_rot_sigma},
                   {"noise_seed", noise.rng_seed},
                   {"huber_delta", solver.huber_delta},
                   {"residual_threshold", solver.residual_threshold},
                   {"trials", trials}};
  return report;
}

nlohmann::json to_json(const CoverageReport& report) {
  nlohmann::json per_trial = nlohmann::json::array();
  for (const auto& r : report.per_trial) {
    nlohmann::json item = {{"index", r.index}, {"solved", r.solved}};
    if (!r.failure.empty()) item["note"] = r.failure;
    if (r.solved) {
      item["position_error"] = r.position_error;
      item["angular_error"] = r.angular_error;
      item["sigma_p"] = r.sigma_p;
      item["sigma_r"] = r.sigma_r;
      item["position_covered"] = r.position_covered;
      item["angular_covered"] = r.angular_covered;
      item["map_points"] = r.map_points;
      item["tracks"] = r.tracks;
    }
    per_trial.push_back(std::move(item));
  }
  return {{"trials", report.trials},
          {"coverage", {{"angular", report.angular_coverage}, {"positional", report.positional_coverage}}},
          {"failures", report.failures},
          {"zero_sigma_trials", report.zero_sigma_trials},
          {"config", report.config},
          {"per_trial", std::move(per_trial)}};
}

}  // namespace geoloc

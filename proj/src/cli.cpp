#include "geoloc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "geoloc/error.hpp"
#include "geoloc/evaluation.hpp"
#include "geoloc/io.hpp"
#include "geoloc/pipeline.hpp"
#include "geoloc/retrieval.hpp"
#include "geoloc/sim.hpp"

namespace geoloc {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Raised for problems with the command line or its input files.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::ParseError:
    case ErrorCode::NonUnitQuaternion:
    case ErrorCode::DuplicateObservation:
    case ErrorCode::MissingPose:
    case ErrorCode::MissingDescriptor:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyInput:
    case ErrorCode::UnknownSeed:
    case ErrorCode::InvalidArgument:
      return true;
    default:
      return false;
  }
}

// "key: value" lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int number = 0;
  const auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(number) + ": expected 'key: value'");
    }
    std::string key = trim(line.substr(0, colon));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    entries.emplace_back(key, trim(line.substr(colon + 1)));
  }
  return entries;
}

// Splices config entries in as flags right after the subcommand name, so
// flags given on the command line (parsed later, last one wins) override them.
std::vector<std::string> apply_config(std::vector<std::string> args, const std::set<std::string>& subcommands) {
  std::optional<std::string> config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (!config_path) return args;
  std::size_t insert_at = 1;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (subcommands.contains(args[i])) {
      insert_at = i + 1;
      break;
    }
  }
  std::vector<std::string> flags;
  for (const auto& [key, value] : read_config(*config_path)) {
    if (key == "config") throw UsageError("config files cannot include other config files");
    flags.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at), flags.begin(), flags.end());
  return args;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * fraction);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

struct KeyframeFlags {
  KeyframeConfig cfg;
  double angle_threshold_deg = cfg.angle_threshold * kRadToDeg;

  void add_to(CLI::App* app) {
    app->add_option("--optimal-baseline", cfg.optimal_baseline, "Keyframe optimal baseline (m)");
    app->add_option("--baseline-stddev", cfg.baseline_stddev, "Keyframe baseline tolerance (m)");
    app->add_option("--angle-threshold", angle_threshold_deg, "Keyframe angle threshold (deg)");
    app->add_option("--search-range", cfg.search_range, "Keyframe search range (frames)");
    app->add_option("--group-size", cfg.group_size, "Keyframe group size (odd, >= 3)");
  }
  KeyframeConfig resolve() const {
    KeyframeConfig out = cfg;
    out.angle_threshold = angle_threshold_deg * kDegToRad;
    return out;
  }
};

// ---- mc-coverage -----------------------------------------------------------

struct CoverageFlags {
  int trials = 1000;
  double pixel_sigma = 1.0;
  double label_noise_pos = 0.0;
  double label_noise_rot_deg = 0.0;
  std::uint64_t seed = 0;
  int points = 119;
  int cameras = 4;
  double huber_delta = 1.0;
  std::string out;
};

int cmd_mc_coverage(const CoverageFlags& f, int threads, std::ostream& out) {
  if (f.trials < 1) throw UsageError("--trials must be >= 1");
  if (f.pixel_sigma < 0 || f.label_noise_pos < 0 || f.label_noise_rot_deg < 0) {
    throw UsageError("noise levels must be >= 0");
  }
  SceneSpec scene;
  scene.point_count = f.points;
  scene.camera_count = f.cameras;
  scene.seed = f.seed;
  NoiseSpec noise;
  noise.pixel_sigma = f.pixel_sigma;
  noise.label_pos_sigma = f.label_noise_pos;
  noise.label_rot_sigma = f.label_noise_rot_deg * kDegToRad;
  noise.rng_seed = f.seed;
  SolverConfig solver;
  solver.huber_delta = f.huber_delta;
  const CoverageReport report = run_coverage_experiment(scene, noise, f.trials, solver, threads);
  if (!f.out.empty()) write_text(f.out, to_json(report).dump(2) + "\n");
  out << "angular coverage: " << percent(report.angular_coverage) << "\n"
      << "positional coverage: " << percent(report.positional_coverage) << "\n"
      << "trials: " << report.trials << ", failures: " << report.failures
      << ", zero-sigma trials: " << report.zero_sigma_trials << "\n";
  return kExitOk;
}

// ---- localize --------------------------------------------------------------

struct LocalizeFlags {
  std::string train_traj;
  std::string tracks;
  std::string query_tracks;
  std::string intrinsics;
  std::string descriptors;
  std::string query_descriptors;
  std::string query_traj;
  bool oracle = false;
  double oracle_lambda = 1.0;
  std::string out;
  KeyframeFlags keyframe;
  double huber_delta = 1.0;
  double residual_threshold = 5.0;
  int motion_window = 4;
  int bootstrap_frames = 4;
};

void attach_descriptors(std::vector<Frame>& frames, const std::vector<DescriptorRecord>& records) {
  std::unordered_map<FrameId, const std::vector<float>*> by_id;
  for (const auto& r : records) by_id[r.frame_id] = &r.values;
  for (Frame& f : frames) {
    if (auto it = by_id.find(f.id); it != by_id.end()) f.descriptor = *it->second;
  }
}

int cmd_localize(const LocalizeFlags& f, std::ostream& out) {
  if (f.oracle == !f.descriptors.empty()) throw UsageError("exactly one of --descriptors or --oracle is required");
  if (!f.descriptors.empty() && f.query_descriptors.empty()) {
    throw UsageError("--descriptors requires --query-descriptors");
  }
  if (f.oracle && f.query_traj.empty()) {
    throw Error(ErrorCode::MissingPose, "--oracle needs query ground truth (--query-traj)");
  }

  TrainingData training;
  training.frames = load_trajectory(f.train_traj);
  training.observations = load_tracks(f.tracks);
  training.intrinsics = load_intrinsics(f.intrinsics);
  const std::vector<Observation> query_tracks = load_tracks(f.query_tracks);

  std::vector<Frame> queries;
  if (!f.query_traj.empty()) {
    queries = load_trajectory(f.query_traj);
  } else {
    std::set<FrameId> ids;
    for (const auto& o : query_tracks) ids.insert(o.frame_id);
    for (FrameId id : ids) {
      Frame q;
      q.id = id;
      queries.push_back(std::move(q));
    }
  }
  if (queries.empty()) throw Error(ErrorCode::EmptyInput, "no query frames");

  std::optional<RetrievalBackend> backend;
  if (f.oracle) {
    backend.emplace(PoseOracle{training.frames, f.oracle_lambda});
  } else {
    const auto train_desc = load_descriptors(f.descriptors);
    attach_descriptors(queries, load_descriptors(f.query_descriptors));
    backend.emplace(DescriptorIndex::build(train_desc));
  }

  PipelineConfig cfg;
  cfg.keyframe = f.keyframe.resolve();
  cfg.solver.huber_delta = f.huber_delta;
  cfg.solver.residual_threshold = f.residual_threshold;
  cfg.motion_window = f.motion_window;
  cfg.bootstrap_frames = f.bootstrap_frames;
  Localizer localizer(std::move(training), std::move(*backend), cfg);
  const std::vector<QueryResult> results = localizer.localize_sequence(queries, query_tracks);

  std::vector<PoseEstimate> estimates;
  std::map<std::string, int> counts;
  int gated = 0;
  int degraded = 0;
  for (const QueryResult& r : results) {
    estimates.push_back(r.estimate);
    const std::string source(to_string(r.estimate.source));
    ++counts[source];
    gated += r.gated;
    degraded += r.degraded;
    out << "frame " << r.estimate.frame_id << ": " << source << (r.gated ? " (gated)" : "")
        << (r.degraded ? " (degraded: " + r.geometric_error + ")" : "") << "\n";
  }
  save_estimates(f.out, estimates);
  out << "frames: " << results.size();
  for (const auto& [source, n] : counts) out << ", " << source << ": " << n;
  out << ", gated: " << gated << ", degraded: " << degraded << "\n";
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateFlags {
  std::string pred;
  std::string gt;
  std::string out;
};

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out) {
  const std::vector<Frame> pred = load_trajectory(f.pred);
  const std::vector<Frame> gt = load_trajectory(f.gt);
  const ErrorSummary summary = compare_trajectories(pred, gt);
  char line[96];
  std::snprintf(line, sizeof line, "%.3fm, %.3f°", summary.median_position, summary.median_angle * kRadToDeg);
  out << line << "\n";
  if (!f.out.empty()) write_text(f.out, std::string(line) + "\n");
  return kExitOk;
}

// ---- generate --------------------------------------------------------------

struct GenerateFlags {
  SequenceSpec spec;
  std::string motion = "constant_velocity";
  std::string out_dir;
};

int cmd_generate(const GenerateFlags& f, std::ostream& out) {
  SequenceSpec spec = f.spec;
  spec.motion = parse_motion_kind(f.motion);
  const SequenceBundle bundle = generate_sequence(spec);
  write_sequence(bundle, f.out_dir);
  out << "wrote " << bundle.training.size() << " training frames, " << bundle.queries.size() << " queries, "
      << bundle.training_tracks.size() + bundle.query_tracks.size() << " observations to " << f.out_dir << "\n";
  return kExitOk;
}

// ---- select-keyframes ------------------------------------------------------

struct SelectFlags {
  std::string train_traj;
  FrameId seed_frame = 0;
  KeyframeFlags keyframe;
};

int cmd_select_keyframes(const SelectFlags& f, std::ostream& out) {
  const std::vector<Frame> training = load_trajectory(f.train_traj);
  const std::vector<FrameId> ids = select_keyframes(training, f.seed_frame, f.keyframe.resolve());
  for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << ids[i];
  out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monocular localization: geometric locator, motion model and gated fusion", "geoloc"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 0;
  std::string config_path;
  app.add_option("--threads", threads, "Worker threads; 0 uses every hardware thread")->check(CLI::NonNegativeNumber);
  app.add_option("--config", config_path, "File of 'key: value' lines supplying flag values; flags override it");

  CoverageFlags cov;
  CLI::App* mc = app.add_subcommand("mc-coverage", "Monte-Carlo coverage of the geometric locator's 1.96-sigma intervals");
  mc->add_option("--trials", cov.trials, "Number of trials (>= 1)");
  mc->add_option("--pixel-sigma", cov.pixel_sigma, "Pixel noise standard deviation (px)");
  mc->add_option("--label-noise-pos", cov.label_noise_pos, "Training label position noise per axis (m)");
  mc->add_option("--label-noise-rot", cov.label_noise_rot_deg, "Training label rotation noise (deg)");
  mc->add_option("--seed", cov.seed, "Seed for the scene and the noise streams");
  mc->add_option("--points", cov.points, "Map points in the scene");
  mc->add_option("--cameras", cov.cameras, "Training cameras in the scene");
  mc->add_option("--huber-delta", cov.huber_delta, "Huber threshold (px)");
  mc->add_option("--out", cov.out, "Report JSON path (default: none, print only)");

  LocalizeFlags loc;
  CLI::App* lz = app.add_subcommand("localize", "Localize a query sequence against pose-labeled training frames");
  lz->add_option("--train-traj", loc.train_traj, "Training trajectory (timestamp tx ty tz qx qy qz qw)")
      ->required()
      ->check(CLI::ExistingFile);
  lz->add_option("--tracks", loc.tracks, "Training tracks CSV")->required()->check(CLI::ExistingFile);
  lz->add_option("--query-tracks", loc.query_tracks, "Query tracks CSV")->required()->check(CLI::ExistingFile);
  lz->add_option("--intrinsics", loc.intrinsics, "Intrinsics file")->required()->check(CLI::ExistingFile);
  lz->add_option("--descriptors", loc.descriptors, "Training descriptors (GLDC) (default: none)")
      ->check(CLI::ExistingFile);
  lz->add_option("--query-descriptors", loc.query_descriptors, "Query descriptors (GLDC) (default: none)")
      ->check(CLI::ExistingFile);
  lz->add_flag("--oracle", loc.oracle, "Retrieve by ground-truth pose distance instead of descriptors");
  lz->add_option("--oracle-lambda", loc.oracle_lambda, "Oracle rotation weight (m/rad)");
  lz->add_option("--query-traj", loc.query_traj,
                 "Query trajectory giving frame order, timestamps and ground truth (default: none, ids from tracks)")
      ->check(CLI::ExistingFile);
  lz->add_option("--out", loc.out, "Output trajectory; covariances go to <out>.cov.json")->required();
  loc.keyframe.add_to(lz);
  lz->add_option("--huber-delta", loc.huber_delta, "Huber threshold (px)");
  lz->add_option("--residual-threshold", loc.residual_threshold, "Map point mean residual limit (px)");
  lz->add_option("--motion-window", loc.motion_window, "Poses in the motion-model window");
  lz->add_option("--bootstrap-frames", loc.bootstrap_frames, "Leading queries localized geometrically only");

  EvaluateFlags ev;
  CLI::App* evc = app.add_subcommand("evaluate", "Median position and angle error of a predicted trajectory");
  evc->add_option("--pred", ev.pred, "Predicted trajectory")->required()->check(CLI::ExistingFile);
  evc->add_option("--gt", ev.gt, "Ground-truth trajectory")->required()->check(CLI::ExistingFile);
  evc->add_option("--out", ev.out, "Also write the result line here (default: none)");

  GenerateFlags gen;
  CLI::App* gn = app.add_subcommand("generate", "Write a synthetic sequence bundle");
  gn->add_option("--length", gen.spec.length, "Training frames (>= 10)");
  gn->add_option("--motion", gen.motion, "constant_velocity, piecewise or random_walk")
      ->check(CLI::IsMember({"constant_velocity", "piecewise", "random_walk"}));
  gn->add_option("--seed", gen.spec.seed, "Generator seed");
  gn->add_option("--pixel-sigma", gen.spec.pixel_sigma, "Pixel noise on every track (px)");
  gn->add_option("--points-per-frame", gen.spec.points_per_frame, "Points seeded per training frame");
  gn->add_option("--query-fraction", gen.spec.query_fraction, "Trailing fraction of the trajectory held out as queries");
  gn->add_option("--out-dir", gen.out_dir, "Output directory")->required();

  SelectFlags sel;
  CLI::App* sk = app.add_subcommand("select-keyframes", "Print the keyframe group chosen around a seed frame");
  sk->add_option("--train-traj", sel.train_traj, "Training trajectory")->required()->check(CLI::ExistingFile);
  sk->add_option("--seed-frame", sel.seed_frame, "Seed frame id")->required();
  sel.keyframe.add_to(sk);

  try {
    std::vector<std::string> args =
        apply_config(raw_args, {"mc-coverage", "localize", "evaluate", "generate", "select-keyframes"});
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }
    const int workers = resolve_threads(threads);
    if (mc->parsed()) return cmd_mc_coverage(cov, workers, out);
    if (lz->parsed()) return cmd_localize(loc, out);
    if (evc->parsed()) return cmd_evaluate(ev, out);
    if (gn->parsed()) return cmd_generate(gen, out);
    if (sk->parsed()) return cmd_select_keyframes(sel, out);
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_input_error(e.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace geoloc

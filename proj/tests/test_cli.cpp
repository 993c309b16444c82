#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>

#include "geoloc/cli.hpp"
#include "geoloc/error.hpp"
#include "geoloc/evaluation.hpp"
#include "geoloc/io.hpp"
#include "geoloc/sim.hpp"
#include "test_support.hpp"

namespace geoloc {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "geoloc");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

Frame pose_frame(FrameId id, const Pose& pose) {
  Frame f;
  f.id = id;
  f.timestamp = static_cast<double>(id);
  f.label_pose = pose;
  return f;
}

void write_traj(const fs::path& path, const std::vector<Pose>& poses) {
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < poses.size(); ++i) frames.push_back(pose_frame(static_cast<FrameId>(i), poses[i]));
  save_trajectory(path, frames);
}

TEST(Cli, HelpDocumentsEveryFlagAndDefault) {
  const std::map<std::string, std::vector<std::pair<std::string, std::string>>> expected = {
      {"mc-coverage",
       {{"--trials", "1000"}, {"--pixel-sigma", "1"}, {"--label-noise-pos", "0"}, {"--label-noise-rot", "0"},
        {"--seed", "0"}, {"--points", "119"}, {"--cameras", "4"}, {"--huber-delta", "1"}, {"--out", ""}}},
      {"localize",
       {{"--train-traj", ""}, {"--tracks", ""}, {"--query-tracks", ""}, {"--intrinsics", ""}, {"--descriptors", ""},
        {"--query-descriptors", ""}, {"--oracle", ""}, {"--oracle-lambda", "1"}, {"--query-traj", ""},
        {"--out", ""}, {"--optimal-baseline", "0.1"}, {"--baseline-stddev", "0.2"}, {"--angle-threshold", "3"},
        {"--search-range", "100"}, {"--group-size", "7"}, {"--huber-delta", "1"}, {"--residual-threshold", "5"},
        {"--motion-window", "4"}, {"--bootstrap-frames", "4"}}},
      {"evaluate", {{"--pred", ""}, {"--gt", ""}, {"--out", ""}}},
      {"generate",
       {{"--length", "50"}, {"--motion", "constant_velocity"}, {"--seed", "0"}, {"--pixel-sigma", "0.5"},
        {"--points-per-frame", "15"}, {"--query-fraction", "0.4"}, {"--out-dir", ""}}},
      {"select-keyframes",
       {{"--train-traj", ""}, {"--seed-frame", ""}, {"--optimal-baseline", "0.1"}, {"--angle-threshold", "3"}}},
  };
  for (const auto& [sub, flags] : expected) {
    const CliRun r = run({sub, "--help"});
    EXPECT_EQ(r.code, kExitOk) << sub;
    for (const auto& [flag, def] : flags) {
      const auto at = r.out.find(flag);
      ASSERT_NE(at, std::string::npos) << sub << " " << flag << "\n" << r.out;
      if (def.empty()) continue;
      const std::string line = r.out.substr(at, r.out.find('\n', at) - at);
      EXPECT_NE(line.find("[" + def + "]"), std::string::npos) << sub << ": " << line;
    }
  }
  const CliRun top = run({"--help"});
  EXPECT_EQ(top.code, kExitOk);
  for (const char* s : {"mc-coverage", "localize", "evaluate", "generate", "select-keyframes", "--threads", "--config"}) {
    EXPECT_NE(top.out.find(s), std::string::npos) << s;
  }
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"mc-coverage", "--trials", "0"}).code, kExitUsage);
  EXPECT_EQ(run({"mc-coverage", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({"evaluate", "--pred", "/nonexistent/a.traj", "--gt", "/nonexistent/b.traj"}).code, kExitUsage);
  EXPECT_EQ(run({"generate", "--out-dir", test::scratch_dir().string(), "--motion", "zigzag"}).code, kExitUsage);
  EXPECT_EQ(run({"generate", "--out-dir", test::scratch_dir().string(), "--length", "5"}).code, kExitUsage);
}

TEST(Cli, OracleWithoutQueryPosesIsAnInputError) {
  const fs::path dir = test::scratch_dir();
  ASSERT_EQ(run({"generate", "--out-dir", dir.string(), "--length", "20"}).code, kExitOk);
  const CliRun r = run({"localize", "--train-traj", (dir / "train.traj").string(), "--tracks",
                     (dir / "tracks.csv").string(), "--query-tracks", (dir / "query_tracks.csv").string(),
                     "--intrinsics", (dir / "intrinsics.txt").string(), "--oracle", "--out",
                     (dir / "out.traj").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("MissingPose"), std::string::npos) << r.err;
}

TEST(Cli, LocalizeNeedsExactlyOneBackend) {
  const fs::path dir = test::scratch_dir();
  ASSERT_EQ(run({"generate", "--out-dir", dir.string(), "--length", "20"}).code, kExitOk);
  const std::vector<std::string> base = {"localize", "--train-traj", (dir / "train.traj").string(), "--tracks",
                                         (dir / "tracks.csv").string(), "--query-tracks",
                                         (dir / "query_tracks.csv").string(), "--intrinsics",
                                         (dir / "intrinsics.txt").string(), "--out", (dir / "o.traj").string()};
  EXPECT_EQ(run(base).code, kExitUsage);
  auto both = base;
  for (const char* a : {"--oracle", "--descriptors"}) both.push_back(a);
  both.push_back((dir / "train.gldc").string());
  EXPECT_EQ(run(both).code, kExitUsage);
}

TEST(Cli, EvaluateExamples) {
  const fs::path dir = test::scratch_dir();
  std::vector<Pose> gt, shifted, turned;
  const double angles[] = {1.0, 2.0, 10.0};
  for (int i = 0; i < 3; ++i) {
    const Pose p(test::rot_z(0.1 * i), Eigen::Vector3d(i, 0.5 * i, 0));
    gt.push_back(p);
    shifted.push_back(p * Pose::from_translation(Eigen::Vector3d(0, 0.10, 0)));
    turned.push_back(Pose(p.rotation() * test::rot_z(angles[i] * test::kDeg), p.position()));
  }
  write_traj(dir / "gt.traj", gt);
  write_traj(dir / "shifted.traj", shifted);
  write_traj(dir / "turned.traj", turned);
  write_traj(dir / "short.traj", {gt[0], gt[1]});

  const CliRun same = run({"evaluate", "--pred", (dir / "gt.traj").string(), "--gt", (dir / "gt.traj").string()});
  EXPECT_EQ(same.code, kExitOk);
  EXPECT_EQ(same.out, "0.000m, 0.000°\n");
  const CliRun off = run({"evaluate", "--pred", (dir / "shifted.traj").string(), "--gt", (dir / "gt.traj").string()});
  EXPECT_EQ(off.out, "0.100m, 0.000°\n");
  const CliRun rot = run({"evaluate", "--pred", (dir / "turned.traj").string(), "--gt", (dir / "gt.traj").string(),
                       "--out", (dir / "eval.txt").string()});
  EXPECT_EQ(rot.out, "0.000m, 2.000°\n");
  EXPECT_EQ(test::read_file(dir / "eval.txt"), rot.out);
  const CliRun mismatch = run({"evaluate", "--pred", (dir / "short.traj").string(), "--gt", (dir / "gt.traj").string()});
  EXPECT_EQ(mismatch.code, kExitUsage);
}

TEST(Evaluation, MedianAndComparison) {
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(median({}), Error);
  std::vector<Frame> a = {pose_frame(0, Pose::identity())};
  std::vector<Frame> b = {pose_frame(1, Pose::identity())};
  EXPECT_THROW(compare_trajectories(a, b), Error);
  b[0].id = 0;
  b[0].timestamp = 0.0;
  EXPECT_EQ(compare_trajectories(a, b).median_position, 0.0);
}

std::vector<std::vector<std::string>> deterministic_commands(const fs::path& dir, const std::string& tag) {
  const fs::path seq = dir / "seq";
  return {
      {"--threads", "3", "mc-coverage", "--trials", "20", "--seed", "5", "--out", (dir / (tag + "cov.json")).string()},
      {"generate", "--out-dir", (dir / (tag + "gen")).string(), "--motion", "piecewise", "--seed", "3"},
      {"localize", "--train-traj", (seq / "train.traj").string(), "--tracks", (seq / "tracks.csv").string(),
       "--query-tracks", (seq / "query_tracks.csv").string(), "--intrinsics", (seq / "intrinsics.txt").string(),
       "--descriptors", (seq / "train.gldc").string(), "--query-descriptors", (seq / "queries.gldc").string(),
       "--out", (dir / (tag + "loc.traj")).string()},
      {"evaluate", "--pred", (seq / "queries.traj").string(), "--gt", (seq / "queries.traj").string()},
      {"select-keyframes", "--train-traj", (seq / "train.traj").string(), "--seed-frame", "20"},
  };
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

TEST(Cli, EverySubcommandIsDeterministic) {
  const fs::path dir = test::scratch_dir();
  ASSERT_EQ(run({"generate", "--out-dir", (dir / "seq").string(), "--length", "30"}).code, kExitOk);
  const auto first = deterministic_commands(dir, "a_");
  const auto second = deterministic_commands(dir, "b_");
  const std::string prefix_a = (dir / "a_").string(), prefix_b = (dir / "b_").string();
  for (std::size_t i = 0; i < first.size(); ++i) {
    const CliRun x = run(first[i]);
    const CliRun y = run(second[i]);
    ASSERT_EQ(x.code, kExitOk) << first[i][0] << x.err;
    ASSERT_EQ(y.code, kExitOk) << y.err;
    EXPECT_EQ(replace_all(x.out, prefix_a, "@"), replace_all(y.out, prefix_b, "@")) << first[i][0];
  }
  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const std::string path = e.path().string();
    if (!e.is_regular_file() || path.rfind(prefix_a, 0) != 0) continue;
    const fs::path twin = prefix_b + path.substr(prefix_a.size());
    ASSERT_TRUE(fs::exists(twin)) << twin;
    EXPECT_TRUE(replace_all(test::read_file(e.path()), prefix_a, "@") ==
                replace_all(test::read_file(twin), prefix_b, "@"))
        << path;
    ++compared;
  }
  EXPECT_GE(compared, 10);
}

TEST(Cli, CoverageIndependentOfThreads) {
  const fs::path dir = test::scratch_dir();
  run({"--threads", "1", "mc-coverage", "--trials", "16", "--out", (dir / "one.json").string()});
  run({"--threads", "4", "mc-coverage", "--trials", "16", "--out", (dir / "four.json").string()});
  EXPECT_EQ(test::read_file(dir / "one.json"), test::read_file(dir / "four.json"));
}

TEST(Cli, ConfigFileSuppliesDefaultsAndFlagsWin) {
  const fs::path dir = test::scratch_dir();
  test::write_file(dir / "cfg.yaml", "# coverage run\ntrials: 7\nseed: 2\n");
  const CliRun r = run({"--config", (dir / "cfg.yaml").string(), "mc-coverage", "--out", (dir / "r.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("trials: 7"), std::string::npos) << r.out;
  const CliRun o = run({"--config", (dir / "cfg.yaml").string(), "mc-coverage", "--trials", "3"});
  EXPECT_NE(o.out.find("trials: 3"), std::string::npos) << o.out;
}

}  // namespace
}  // namespace geoloc

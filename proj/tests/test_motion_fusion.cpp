#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "geoloc/error.hpp"
#include "geoloc/motion_fusion.hpp"
#include "test_support.hpp"

namespace geoloc {
namespace {

PoseEstimate estimate_at(const Pose& pose, FrameId id) {
  PoseEstimate e;
  e.pose = pose;
  e.frame_id = id;
  e.covariance = 1e-4 * Covariance6::Identity();
  return e;
}

std::vector<Pose> constant_velocity(const Pose& start, const Twist& step, int count) {
  std::vector<Pose> out = {start};
  for (int i = 1; i < count; ++i) out.push_back(out.back() * exp_se3(step));
  return out;
}

GeometricEstimate geometric(const Pose& pose, const Covariance6& cov) {
  GeometricEstimate g;
  g.estimate.pose = pose;
  g.estimate.covariance = cov;
  g.estimate.source = EstimateSource::Geometric;
  g.estimate.frame_id = 7;
  g.estimate.timestamp = 0.7;
  g.sigmas = isometric_sigmas(cov);
  return g;
}

MotionPrediction motion(const Pose& pose, const Covariance6& cov) {
  MotionPrediction m;
  m.estimate.pose = pose;
  m.estimate.covariance = cov;
  m.estimate.source = EstimateSource::Motion;
  m.estimate.frame_id = 7;
  return m;
}

TEST(MotionWindow, EvictsOldestAndRequiresIncreasingIds) {
  MotionWindow w(3);
  for (int i = 0; i < 5; ++i) w.push(estimate_at(Pose::identity(), i));
  EXPECT_EQ(w.size(), 3u);
  EXPECT_EQ(w.history().front().frame_id, 2);
  EXPECT_EQ(w.history().back().frame_id, 4);
  EXPECT_THROW(w.push(estimate_at(Pose::identity(), 4)), Error);
  EXPECT_THROW(MotionWindow(0), Error);
}

TEST(MotionModel, ConstantVelocityAlongX) {
  Twist step = Twist::Zero();
  step(0) = 0.1;
  const auto history = constant_velocity(Pose::identity(), step, 4);
  const MotionPrediction m = fit_motion_model(history, 4);
  for (const Twist& r : m.fit_residuals) EXPECT_LT(r.norm(), 1e-12);
  EXPECT_EQ(m.fit_residuals.size(), 4u);
  EXPECT_LT((m.estimate.pose.position() - Eigen::Vector3d(0.4, 0, 0)).norm(), 1e-12);
  EXPECT_LT(misalignment_angle(m.estimate.pose.rotation(), Eigen::Matrix3d::Identity()), 1e-12);
  EXPECT_EQ(m.estimate.source, EstimateSource::Motion);
  EXPECT_EQ(m.estimate.frame_id, 4);
  // Zero residual variance is floored.
  EXPECT_EQ(m.estimate.covariance, Covariance6(kMotionVarianceFloor * Covariance6::Identity()));
}

TEST(MotionModel, GeneralConstantVelocityIsExact) {
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose start = test::random_pose(rng);
    const Twist step = test::random_twist(rng, 0.2, 0.3);
    const auto poses = constant_velocity(start, step, 5);
    const std::vector<Pose> history(poses.begin(), poses.begin() + 4);
    const MotionPrediction m = fit_motion_model(history, 4);
    EXPECT_LT(test::pose_gap(m.estimate.pose, poses[4]), 1e-9);
    for (const Twist& r : m.fit_residuals) EXPECT_LT(r.norm(), 1e-9);
  }
}

TEST(MotionModel, StaticHistory) {
  Rng rng(72);
  const Pose p = test::random_pose(rng);
  const MotionPrediction m = fit_motion_model(std::vector<Pose>(4, p), 1);
  EXPECT_LT(test::pose_gap(m.delta, Pose::identity()), 1e-12);
  EXPECT_LT(test::pose_gap(m.estimate.pose, p), 1e-12);
}

TEST(MotionModel, TwoPosesExtrapolate) {
  const std::vector<Pose> history = {Pose::identity(), Pose::from_translation(Eigen::Vector3d(0, 0.2, 0))};
  const MotionPrediction m = fit_motion_model(history, 2);
  EXPECT_LT((m.estimate.pose.position() - Eigen::Vector3d(0, 0.4, 0)).norm(), 1e-12);
}

TEST(MotionModel, InsufficientHistory) {
  try {
    fit_motion_model(std::vector<Pose>{Pose::identity()}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientHistory);
  }
  MotionWindow w;
  try {
    fit_motion_model(w, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientHistory);
  }
}

TEST(MotionModel, NoiseVarianceMatchesInjectedTwistNoise) {
  Rng rng(73);
  Twist step;
  step << 0.1, 0, 0.02, 0, 0.01, 0;
  Vector6d mean_var = Vector6d::Zero();
  const int repeats = 100;
  for (int r = 0; r < repeats; ++r) {
    auto history = constant_velocity(Pose::identity(), step, 4);
    for (Pose& p : history) {
      Twist n;
      for (int i = 0; i < 6; ++i) n(i) = rng.normal(0.0, 0.01);
      p = p * exp_se3(n);
    }
    mean_var += fit_motion_model(history, 4).estimate.covariance.diagonal();
  }
  mean_var /= repeats;
  for (int i = 0; i < 6; ++i) {
    EXPECT_GT(mean_var(i), 1e-4 / 3) << i;
    EXPECT_LT(mean_var(i), 3e-4) << i;
  }
}

TEST(MotionModel, LeftEquivariance) {
  Rng rng(74);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Pose> history;
    Pose p = test::random_pose(rng);
    for (int i = 0; i < 4; ++i) {
      p = p * exp_se3(test::random_twist(rng, 0.1, 0.05));
      history.push_back(p);
    }
    const Pose g = test::random_pose(rng);
    std::vector<Pose> moved;
    for (const Pose& h : history) moved.push_back(g * h);
    const MotionPrediction a = fit_motion_model(history, 4);
    const MotionPrediction b = fit_motion_model(moved, 4);
    EXPECT_LT(test::pose_gap(b.estimate.pose, g * a.estimate.pose), 1e-7);
    EXPECT_NEAR(motion_objective(history, history.back(), a.delta),
                motion_objective(moved, g * history.back(), a.delta), 1e-9);
  }
}

TEST(Fusion, CommutingOneDof) {
  Covariance6 cg = Covariance6::Identity();
  Covariance6 cm = Covariance6::Identity();
  cm(0, 0) = 3.0;
  const PoseEstimate fused = fuse(geometric(Pose::identity(), cg),
                                  motion(Pose::from_translation(Eigen::Vector3d(1, 0, 0)), cm));
  // Scalar information-weighted mean: (0/1 + 1/3) / (1/1 + 1/3).
  EXPECT_NEAR(fused.pose.position().x(), 0.25, 1e-9);
  EXPECT_NEAR(fused.covariance(0, 0), 1.0 / (1.0 + 1.0 / 3.0), 1e-9);
  EXPECT_EQ(fused.source, EstimateSource::Fused);
  EXPECT_EQ(fused.frame_id, 7);
}

TEST(Fusion, CoincidentInputsHalveCovariance) {
  Rng rng(75);
  const Pose t = test::random_pose(rng);
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Random();
  const Covariance6 c = 1e-3 * (a * a.transpose() + Covariance6::Identity());
  const PoseEstimate fused = fuse(geometric(t, c), motion(t, c));
  EXPECT_LT(test::pose_gap(fused.pose, t), 1e-15);
  EXPECT_LT((fused.covariance - 0.5 * c).cwiseAbs().maxCoeff(), 1e-12 * c.cwiseAbs().maxCoeff());
  // Fused information dominates each input's information.
  const Matrix6d gap = fused.covariance.inverse() - c.inverse();
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix6d>(0.5 * (gap + gap.transpose())).eigenvalues().minCoeff(), -1e-6);
}

TEST(Fusion, HugeMotionCovarianceReturnsGeometric) {
  Rng rng(76);
  const Pose tg = test::random_pose(rng);
  const Pose tm = tg * exp_se3(test::random_twist(rng, 0.1, 0.1));
  const Covariance6 c = 1e-4 * Covariance6::Identity();
  const PoseEstimate fused = fuse(geometric(tg, c), motion(tm, 1e12 * c));
  EXPECT_LT((fused.pose.position() - tg.position()).norm(), 1e-6);
  EXPECT_LT(misalignment_angle(fused.pose.rotation(), tg.rotation()), 1e-6);
}

TEST(Fusion, OptimumLiesBetweenInputs) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose tg = test::random_pose(rng);
    const Pose tm = tg * exp_se3(test::random_twist(rng, 0.3, 0.3));
    Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Random();
    Eigen::Matrix<double, 6, 6> b = Eigen::Matrix<double, 6, 6>::Random();
    const auto g = geometric(tg, 1e-2 * (a * a.transpose() + Covariance6::Identity()));
    const auto m = motion(tm, 1e-2 * (b * b.transpose() + Covariance6::Identity()));
    const PoseEstimate fused = fuse(g, m);
    const double at_fused = fusion_objective(g.estimate, m.estimate, fused.pose);
    EXPECT_LE(at_fused, fusion_objective(g.estimate, m.estimate, tg) + 1e-12);
    EXPECT_LE(at_fused, fusion_objective(g.estimate, m.estimate, tm) + 1e-12);
    EXPECT_TRUE(is_psd(fused.covariance));
  }
}

TEST(Fusion, SingularCovariance) {
  try {
    fuse(geometric(Pose::identity(), Covariance6::Zero()), motion(Pose::identity(), Covariance6::Identity()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularCovariance);
  }
}

TEST(Gate, FiresAtTenSigma) {
  const Covariance6 c = 1e-4 * Covariance6::Identity();  // sigma_p = 0.01 m
  const auto g = geometric(Pose::from_translation(Eigen::Vector3d(0.1, 0, 0)), c);
  const auto m = motion(Pose::identity(), c);
  EXPECT_TRUE(gate_rejects(g, m));
  const PoseEstimate out = gate_and_fuse(g, m);
  EXPECT_EQ(out.source, EstimateSource::Motion);
  EXPECT_LT(test::pose_gap(out.pose, Pose::identity()), 1e-15);
  EXPECT_EQ(out.frame_id, 7);
}

TEST(Gate, FiresOnRotationAlone) {
  const Covariance6 c = 1e-4 * Covariance6::Identity();  // sigma_r ~= 0.0173 rad
  const auto g = geometric(Pose(test::rot_z(0.1), Eigen::Vector3d::Zero()), c);
  EXPECT_TRUE(gate_rejects(g, motion(Pose::identity(), c)));
}

TEST(Gate, PassesWithinATenthSigma) {
  const Covariance6 c = 1e-4 * Covariance6::Identity();
  const auto g = geometric(Pose::from_translation(Eigen::Vector3d(0.001, 0, 0)), c);
  const auto m = motion(Pose::identity(), c);
  EXPECT_FALSE(gate_rejects(g, m));
  EXPECT_EQ(gate_and_fuse(g, m).source, EstimateSource::Fused);
}

TEST(Gate, SingleInputsPassThrough) {
  const Covariance6 c = 1e-4 * Covariance6::Identity();
  const auto g = geometric(Pose::from_translation(Eigen::Vector3d(5, 0, 0)), c);
  const PoseEstimate only_geo = gate_and_fuse(g, std::nullopt);
  EXPECT_EQ(only_geo.source, EstimateSource::Geometric);
  EXPECT_EQ(only_geo.pose.position(), g.estimate.pose.position());
  EXPECT_EQ(gate_and_fuse(std::nullopt, motion(Pose::identity(), c)).source, EstimateSource::Motion);
  try {
    gate_and_fuse(std::nullopt, std::nullopt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoInput);
  }
}

TEST(Gate, ScaleConsistentDecision) {
  // Deviation of 0.05 m against sigma_p = 0.01 k: fires for k < 5/3, passes above.
  const Covariance6 c = 1e-4 * Covariance6::Identity();
  const auto m = motion(Pose::identity(), c);
  for (double k : {1.0, 1.5, 1.7, 2.0}) {
    const auto g = geometric(Pose::from_translation(Eigen::Vector3d(0.05, 0, 0)), k * k * c);
    EXPECT_NEAR(g.sigmas.position, 0.01 * k, 1e-15);
    EXPECT_EQ(gate_rejects(g, m), k < 5.0 / 3.0) << k;
  }
}

}  // namespace
}  // namespace geoloc

#include <gtest/gtest.h>

#include "geoloc/error.hpp"
#include "geoloc/lie.hpp"
#include "test_support.hpp"

namespace geoloc {
namespace {

using test::kPi;

TEST(ExpSe3, ZeroTwistIsIdentity) {
  EXPECT_LT(test::pose_gap(exp_se3(Twist::Zero()), Pose::identity()), 1e-15);
}

TEST(ExpSe3, PureTranslation) {
  Twist xi = Twist::Zero();
  xi(0) = 1.0;
  const Pose t = exp_se3(xi);
  EXPECT_TRUE(t.rotation().isApprox(Eigen::Matrix3d::Identity(), 1e-15));
  EXPECT_NEAR((t.position() - Eigen::Vector3d(1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(ExpSe3, QuarterTurnMatchesRodrigues) {
  Twist xi = Twist::Zero();
  xi(5) = kPi / 2;
  const Pose t = exp_se3(xi);
  // Rodrigues with axis z and angle pi/2: cos = 0, sin = 1.
  Eigen::Matrix3d expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((t.rotation() - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(t.position().norm(), 1e-15);
}

TEST(LogSe3, IdentityAndTranslation) {
  EXPECT_LT(log_se3(Pose::identity()).norm(), 1e-15);
  const Twist xi = log_se3(Pose::from_translation(Eigen::Vector3d(0, 3, 4)));
  Twist expected;
  expected << 0, 3, 4, 0, 0, 0;
  EXPECT_LT((xi - expected).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(xi.norm(), 5.0);
}

TEST(LogSe3, NormEqualsPoseDistanceFromIdentity) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Pose t = test::random_pose(rng);
    EXPECT_NEAR(log_se3(t).norm(), pose_distance(Pose::identity(), t), 1e-12);
  }
}

TEST(LogSe3, NearPiThrows) {
  Twist xi = Twist::Zero();
  xi(3) = kPi - 1e-7;
  try {
    log_se3(exp_se3(xi));
    FAIL() << "expected NearPiRotation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NearPiRotation);
  }
}

TEST(LogSe3, ClosestToPiStillInverts) {
  Twist xi = Twist::Zero();
  xi.tail<3>() = Eigen::Vector3d(1, 2, -1).normalized() * (kPi - 2e-6);
  xi.head<3>() << 0.3, -0.2, 0.1;
  EXPECT_LT((log_se3(exp_se3(xi)) - xi).norm(), 1e-6);
}

TEST(LieProperty, RoundTripTenThousandTwists) {
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Twist xi = test::random_twist(rng, 5.0, kPi - 0.01);
    worst = std::max(worst, (log_se3(exp_se3(xi)) - xi).norm());
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(LieProperty, RoundTripTinyAngles) {
  Rng rng(2);
  for (double angle : {0.0, 1e-12, 1e-9, 1e-8, 2e-8, 1e-6, 1e-3}) {
    Twist xi;
    xi.head<3>() = Eigen::Vector3d(0.4, -1.0, 2.0);
    xi.tail<3>() = rng.unit_vector() * angle;
    EXPECT_LT((log_se3(exp_se3(xi)) - xi).norm(), 1e-12) << angle;
  }
}

TEST(LieProperty, ExpOfLogIsIdentityMap) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Pose t = test::random_pose(rng);
    EXPECT_LT(test::pose_gap(exp_se3(log_se3(t)), t), 1e-9);
  }
}

TEST(LieProperty, GroupAxioms) {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = test::random_pose(rng), b = test::random_pose(rng), c = test::random_pose(rng);
    EXPECT_LT(test::pose_gap((a * b) * c, a * (b * c)), 1e-9);
    EXPECT_LT(test::pose_gap(a * a.inverse(), Pose::identity()), 1e-9);
    EXPECT_LT(test::pose_gap(a.inverse() * a, Pose::identity()), 1e-9);
    EXPECT_TRUE(is_rotation(a.rotation()));
  }
}

TEST(LieProperty, CompositionChainStaysOrthonormal) {
  Rng rng(5);
  Pose t;
  for (int i = 0; i < 100000; ++i) t = t * test::random_pose(rng, 0.1, 0.3);
  EXPECT_LE(t.orthogonality_defect(), 1e-9);
  EXPECT_NEAR(t.rotation().determinant(), 1.0, 1e-9);
}

TEST(PoseDistance, Examples) {
  Rng rng(6);
  const Pose t = test::random_pose(rng);
  EXPECT_NEAR(pose_distance(t, t), 0.0, 1e-12);
  EXPECT_NEAR(pose_distance(Pose::identity(), Pose::from_translation(Eigen::Vector3d(1, 0, 0))), 1.0, 1e-15);
}

TEST(PoseDistance, SymmetricAndLeftInvariant) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const Pose a = test::random_pose(rng, 2.0, 1.4), b = test::random_pose(rng, 2.0, 1.4);
    const Pose g = test::random_pose(rng);
    EXPECT_NEAR(pose_distance(a, b), pose_distance(b, a), 1e-9);
    EXPECT_NEAR(pose_distance(g * a, g * b), pose_distance(a, b), 1e-9);
    EXPECT_GT(pose_distance(a, b), 0.0);
  }
}

TEST(MisalignmentAngle, Examples) {
  const Eigen::Matrix3d i = Eigen::Matrix3d::Identity();
  EXPECT_DOUBLE_EQ(misalignment_angle(i, i), 0.0);
  EXPECT_NEAR(misalignment_angle(i, test::rot_z(kPi / 2)), kPi / 2, 1e-15);
  EXPECT_NEAR(misalignment_angle(i, test::rot_z(kPi)), kPi, 1e-12);
}

TEST(MisalignmentAngle, SymmetricAndMatchesLogNorm) {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Matrix3d r1 = exp_so3(rng.unit_vector() * rng.uniform(0, kPi - 0.01));
    const Eigen::Matrix3d r2 = exp_so3(rng.unit_vector() * rng.uniform(0, kPi - 0.01));
    const double angle = misalignment_angle(r1, r2);
    EXPECT_NEAR(angle, misalignment_angle(r2, r1), 1e-12);
    EXPECT_GE(angle, 0.0);
    EXPECT_LE(angle, kPi);
    const Eigen::Matrix3d rel = r1.transpose() * r2;
    if (angle < kPi - 0.01) {
      EXPECT_NEAR(angle, log_so3(rel).norm(), 1e-9);
    }
  }
}

TEST(MisalignmentAngle, ResolvesTinyAngles) {
  // The clamped acos form loses everything below ~1e-8 rad.
  const Eigen::Matrix3d r = test::rot_z(1e-10);
  EXPECT_NEAR(misalignment_angle(Eigen::Matrix3d::Identity(), r), 1e-10, 1e-20);
}

// Finite-difference check of exp(xi + d) ~= exp(J_l(xi) d) exp(xi).
TEST(Se3Jacobians, LeftJacobianMatchesFiniteDifferences) {
  Rng rng(9);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const Twist xi = test::random_twist(rng, 1.0, 2.5);
    const Matrix6d jl = se3_left_jacobian(xi);
    const Pose base_inv = exp_se3(xi).inverse();
    for (int c = 0; c < 6; ++c) {
      Twist d = Twist::Zero();
      d(c) = h;
      const Twist fd = (log_se3(exp_se3(xi + d) * base_inv) - log_se3(exp_se3(xi - d) * base_inv)) / (2 * h);
      EXPECT_LT((fd - jl.col(c)).norm(), 1e-6 * std::max(1.0, jl.col(c).norm()));
    }
  }
}

TEST(Se3Jacobians, InversesAndRightJacobian) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const double angle = trial < 20 ? std::pow(10.0, -trial) : rng.uniform(0, 3.0);
    Twist xi;
    xi.head<3>() = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    xi.tail<3>() = rng.unit_vector() * angle;
    EXPECT_LT((se3_left_jacobian(xi) * se3_left_jacobian_inverse(xi) - Matrix6d::Identity()).norm(), 1e-9);
    EXPECT_LT((se3_right_jacobian(xi) * se3_right_jacobian_inverse(xi) - Matrix6d::Identity()).norm(), 1e-9);
    EXPECT_LT((se3_right_jacobian(xi) - se3_left_jacobian(-xi)).norm(), 1e-12);
    // J_l = Ad(exp(xi)) J_r
    EXPECT_LT((se3_left_jacobian(xi) - adjoint(exp_se3(xi)) * se3_right_jacobian(xi)).norm(), 1e-9);
  }
}

TEST(Se3Jacobians, SeriesBranchIsContinuous) {
  Rng rng(12);
  const Eigen::Vector3d axis = rng.unit_vector();
  Twist below, above;
  below << 0.5, -0.2, 0.9, 0, 0, 0;
  above = below;
  below.tail<3>() = axis * (1e-2 - 1e-9);
  above.tail<3>() = axis * (1e-2 + 1e-9);
  EXPECT_LT((se3_left_jacobian(below) - se3_left_jacobian(above)).norm(), 1e-8);
  EXPECT_LT((se3_left_jacobian_inverse(below) - se3_left_jacobian_inverse(above)).norm(), 1e-8);
}

TEST(Adjoint, ConjugatesTwists) {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const Pose t = test::random_pose(rng);
    const Twist xi = test::random_twist(rng, 1.0, 1.0);
    EXPECT_LT(test::pose_gap(t * exp_se3(xi) * t.inverse(), exp_se3(adjoint(t) * xi)), 1e-9);
  }
}

TEST(So3, HatVeeAndNearestRotation) {
  const Eigen::Vector3d v(1, -2, 3);
  EXPECT_EQ(vee(hat(v)), v);
  EXPECT_LT((hat(v) + hat(v).transpose()).norm(), 1e-15);
  Rng rng(14);
  const Eigen::Matrix3d r = exp_so3(rng.unit_vector() * 1.2);
  const Eigen::Matrix3d noisy = r + 1e-6 * Eigen::Matrix3d::Ones();
  EXPECT_TRUE(is_rotation(nearest_rotation(noisy)));
  EXPECT_LT((nearest_rotation(noisy) - r).norm(), 1e-5);
}

}  // namespace
}  // namespace geoloc

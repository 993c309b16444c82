#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace geoloc {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// se(3) coordinates ordered (translation rho, rotation phi): indices 0-2 in
/// meters, 3-5 in radians.
using Twist = Vector6d;

/// Covariance over twist coordinates, same (translation, rotation) ordering.
using Covariance6 = Matrix6d;

/// Largest rotation angle for which log maps are evaluated.
inline constexpr double kMaxLogAngle = 3.14159265358979323846 - 1e-6;

Eigen::Matrix3d hat(const Eigen::Vector3d& v);
Eigen::Vector3d vee(const Eigen::Matrix3d& m);

/// Projects an arbitrary 3x3 matrix onto the nearest rotation (SVD).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

/// Rigid transform x -> R x + p. For cameras, maps camera coordinates into
/// the global frame (p is the camera center).
class Pose {
 public:
  Pose() : rotation_(Eigen::Matrix3d::Identity()), position_(Eigen::Vector3d::Zero()) {}
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& position)
      : rotation_(rotation), position_(position) {}
  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& position)
      : rotation_(q.normalized().toRotationMatrix()), position_(position) {}

  static Pose identity() { return Pose(); }
  static Pose from_translation(const Eigen::Vector3d& p) {
    return Pose(Eigen::Matrix3d::Identity(), p);
  }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& position() const { return position_; }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation_); }

  Pose inverse() const;
  Eigen::Vector3d transform(const Eigen::Vector3d& x) const { return rotation_ * x + position_; }
  Eigen::Vector3d inverse_transform(const Eigen::Vector3d& x) const {
    return rotation_.transpose() * (x - position_);
  }

  /// Largest entry of |R R^T - I|.
  double orthogonality_defect() const;
  Pose normalized() const { return Pose(nearest_rotation(rotation_), position_); }

  Pose operator*(const Pose& rhs) const;
  Pose& operator*=(const Pose& rhs) { return *this = *this * rhs; }

  Eigen::Matrix4d matrix() const;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d position_;
};

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& phi);
/// Throws NearPiRotation for angles above kMaxLogAngle.
Eigen::Vector3d log_so3(const Eigen::Matrix3d& rotation);

/// SO(3) left Jacobian: exp(phi + d) ~= exp(J_l(phi) d) exp(phi).
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi);
Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi);

Pose exp_se3(const Twist& xi);
Twist log_se3(const Pose& pose);

/// Ad(T) such that T exp(xi) T^-1 = exp(Ad(T) xi).
Matrix6d adjoint(const Pose& pose);

/// SE(3) left Jacobian: exp(xi + d) ~= exp(J_l(xi) d) exp(xi).
Matrix6d se3_left_jacobian(const Twist& xi);
Matrix6d se3_left_jacobian_inverse(const Twist& xi);
/// Right Jacobian: exp(xi + d) ~= exp(xi) exp(J_r(xi) d); equals J_l(-xi).
Matrix6d se3_right_jacobian(const Twist& xi);
Matrix6d se3_right_jacobian_inverse(const Twist& xi);

/// Rotation angle of R1^T R2 in [0, pi].
double misalignment_angle(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2);

/// log(T1^-1 T2) as a twist.
Twist relative_twist(const Pose& t1, const Pose& t2);
/// Norm of relative_twist.
double pose_distance(const Pose& t1, const Pose& t2);

bool is_rotation(const Eigen::Matrix3d& m, double tol = 1e-9);

}  // namespace geoloc

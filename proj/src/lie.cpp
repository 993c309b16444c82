#include "geoloc/lie.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "geoloc/error.hpp"

namespace geoloc {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTaylorAngle = 1e-8;
// Below this angle the SE(3) Jacobian coefficients lose too many digits to
// cancellation and switch to series.
constexpr double kSeriesAngle = 1e-2;

}  // namespace

Eigen::Matrix3d hat(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return Pose(rt, -rt * position_);
}

double Pose::orthogonality_defect() const {
  return (rotation_ * rotation_.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out(rotation_ * rhs.rotation_, rotation_ * rhs.position_ + position_);
  if (out.orthogonality_defect() > 1e-9) out = out.normalized();
  return out;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = position_;
  return m;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  if (theta < kTaylorAngle) return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& rotation) {
  const double cos_theta = std::clamp(0.5 * (rotation.trace() - 1.0), -1.0, 1.0);
  const Eigen::Vector3d axis_sin = 0.5 * vee(rotation - rotation.transpose());
  const double theta = std::atan2(axis_sin.norm(), cos_theta);
  if (theta > kMaxLogAngle) {
    throw Error(ErrorCode::NearPiRotation, "rotation angle within 1e-6 of pi");
  }
  if (theta < kTaylorAngle) {
    // R ~ I + phi^ + phi^2/2; the symmetric term does not affect the
    // antisymmetric part to second order.
    return axis_sin;
  }
  if (theta < kPi - 1e-3) return axis_sin * (theta / std::sin(theta));

  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part (1 - cos) a a^T instead.
  const Eigen::Matrix3d b =
      0.5 * (rotation + rotation.transpose()) - cos_theta * Eigen::Matrix3d::Identity();
  Eigen::Index col = 0;
  b.diagonal().maxCoeff(&col);
  Eigen::Vector3d axis = b.col(col).normalized();
  if (axis.dot(axis_sin) < 0.0) axis = -axis;
  return axis * theta;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  const double t2 = theta * theta;
  double a;
  double b;
  if (theta < kSeriesAngle) {
    a = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    b = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    a = (1.0 - std::cos(theta)) / t2;
    b = (theta - std::sin(theta)) / (t2 * theta);
  }
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = hat(phi);
  const double t2 = theta * theta;
  double c;
  if (theta < kSeriesAngle) {
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    c = 1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() - 0.5 * k + c * k * k;
}

Pose exp_se3(const Twist& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  return Pose(exp_so3(phi), so3_left_jacobian(phi) * rho);
}

Twist log_se3(const Pose& pose) {
  const Eigen::Vector3d phi = log_so3(pose.rotation());
  Twist xi;
  xi.head<3>() = so3_left_jacobian_inverse(phi) * pose.position();
  xi.tail<3>() = phi;
  return xi;
}

Matrix6d adjoint(const Pose& pose) {
  Matrix6d ad = Matrix6d::Zero();
  ad.topLeftCorner<3, 3>() = pose.rotation();
  ad.bottomRightCorner<3, 3>() = pose.rotation();
  ad.topRightCorner<3, 3>() = hat(pose.position()) * pose.rotation();
  return ad;
}

namespace {

// Off-diagonal block of the SE(3) left Jacobian.
Eigen::Matrix3d se3_q_block(const Eigen::Vector3d& rho, const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const double t2 = theta * theta;
  const Eigen::Matrix3d rx = hat(rho);
  const Eigen::Matrix3d px = hat(phi);
  double c1;
  double c2;
  double c3;
  if (theta < kSeriesAngle) {
    c1 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    c2 = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
    c3 = 1.0 / 120.0 - t2 / 2520.0;
  } else {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c1 = (theta - s) / (t2 * theta);
    c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta);
  }
  const Eigen::Matrix3d pr = px * rx;
  const Eigen::Matrix3d rp = rx * px;
  const Eigen::Matrix3d prp = pr * px;
  return 0.5 * rx + c1 * (pr + rp + prp) + c2 * (px * pr + rp * px - 3.0 * prp) +
         c3 * (prp * px + px * prp);
}

}  // namespace

Matrix6d se3_left_jacobian(const Twist& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  const Eigen::Matrix3d j = so3_left_jacobian(phi);
  Matrix6d out = Matrix6d::Zero();
  out.topLeftCorner<3, 3>() = j;
  out.bottomRightCorner<3, 3>() = j;
  out.topRightCorner<3, 3>() = se3_q_block(rho, phi);
  return out;
}

Matrix6d se3_left_jacobian_inverse(const Twist& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  const Eigen::Matrix3d j_inv = so3_left_jacobian_inverse(phi);
  Matrix6d out = Matrix6d::Zero();
  out.topLeftCorner<3, 3>() = j_inv;
  out.bottomRightCorner<3, 3>() = j_inv;
  out.topRightCorner<3, 3>() = -j_inv * se3_q_block(rho, phi) * j_inv;
  return out;
}

Matrix6d se3_right_jacobian(const Twist& xi) { return se3_left_jacobian(-xi); }

Matrix6d se3_right_jacobian_inverse(const Twist& xi) { return se3_left_jacobian_inverse(-xi); }

double misalignment_angle(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2) {
  // acos((tr - 1) / 2) evaluated through atan2: same value, but it keeps full
  // precision near zero where acos flattens out.
  const Eigen::Matrix3d rel = r1.transpose() * r2;
  const double c = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  const double s = 0.5 * vee(rel - rel.transpose()).norm();
  return std::atan2(s, c);
}

Twist relative_twist(const Pose& t1, const Pose& t2) { return log_se3(t1.inverse() * t2); }

double pose_distance(const Pose& t1, const Pose& t2) { return relative_twist(t1, t2).norm(); }

bool is_rotation(const Eigen::Matrix3d& m, double tol) {
  return (m * m.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

}  // namespace geoloc

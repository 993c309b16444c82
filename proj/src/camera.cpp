#include "geoloc/camera.hpp"

#include <string>

#include "geoloc/error.hpp"

namespace geoloc {

Intrinsics::Intrinsics(double fx, double fy, double cx, double cy)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy) {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
}

Eigen::Matrix<double, 3, 4> Intrinsics::matrix() const {
  Eigen::Matrix<double, 3, 4> m = Eigen::Matrix<double, 3, 4>::Zero();
  m(0, 0) = fx_;
  m(1, 1) = fy_;
  m(0, 2) = cx_;
  m(1, 2) = cy_;
  m(2, 2) = 1.0;
  return m;
}

void Intrinsics::set_image_size(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  }
  image_size_ = Eigen::Vector2i(width, height);
}

bool Intrinsics::in_bounds(const Eigen::Vector2d& pixel) const {
  if (!image_size_) return true;
  return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() < (*image_size_)(0) &&
         pixel.y() < (*image_size_)(1);
}

Eigen::Vector3d Intrinsics::back_project(const Eigen::Vector2d& pixel) const {
  return {(pixel.x() - cx_) / fx_, (pixel.y() - cy_) / fy_, 1.0};
}

namespace {

Eigen::Vector3d camera_point(const Pose& pose, const Eigen::Vector3d& x) {
  Eigen::Vector3d xc = pose.inverse_transform(x);
  if (!(xc.z() > kMinDepth)) {
    throw Error(ErrorCode::NonPositiveDepth, "point depth " + std::to_string(xc.z()));
  }
  return xc;
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Eigen::Vector3d& xc, const Intrinsics& k) {
  const double iz = 1.0 / xc.z();
  const double iz2 = iz * iz;
  Eigen::Matrix<double, 2, 3> j;
  j << k.fx() * iz, 0.0, -k.fx() * xc.x() * iz2, 0.0, k.fy() * iz, -k.fy() * xc.y() * iz2;
  return j;
}

}  // namespace

Eigen::Vector2d project(const Pose& pose, const Eigen::Vector3d& x, const Intrinsics& k) {
  const Eigen::Vector3d xc = camera_point(pose, x);
  return {k.fx() * xc.x() / xc.z() + k.cx(), k.fy() * xc.y() / xc.z() + k.cy()};
}

Eigen::Matrix<double, 2, 6> right_jacobian_residual(const Pose& pose, const Eigen::Vector3d& x,
                                                    const Intrinsics& k) {
  // (T exp(d))^-1 x = exp(-d) xc ~= xc - rho + xc^ phi
  const Eigen::Vector3d xc = camera_point(pose, x);
  Eigen::Matrix<double, 3, 6> dxc;
  dxc.leftCols<3>() = -Eigen::Matrix3d::Identity();
  dxc.rightCols<3>() = hat(xc);
  return projection_jacobian(xc, k) * dxc;
}

Eigen::Matrix<double, 2, 3> point_jacobian_residual(const Pose& pose, const Eigen::Vector3d& x,
                                                    const Intrinsics& k) {
  const Eigen::Vector3d xc = camera_point(pose, x);
  return projection_jacobian(xc, k) * pose.rotation().transpose();
}

}  // namespace geoloc

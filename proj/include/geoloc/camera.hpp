#pragma once

#include <Eigen/Core>
#include <optional>

#include "geoloc/lie.hpp"

namespace geoloc {

/// Points closer than this to the image plane cannot be projected.
inline constexpr double kMinDepth = 1e-9;

/// Pinhole intrinsics. Image bounds are optional; synthetic scenes use an
/// unbounded image plane.
class Intrinsics {
 public:
  Intrinsics(double fx, double fy, double cx, double cy);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  /// [K | 0], the 3x4 projection-ready form.
  Eigen::Matrix<double, 3, 4> matrix() const;
  Eigen::Matrix3d k() const { return matrix().leftCols<3>(); }

  void set_image_size(int width, int height);
  std::optional<Eigen::Vector2i> image_size() const { return image_size_; }
  bool in_bounds(const Eigen::Vector2d& pixel) const;

  /// Unit-depth ray direction in camera coordinates.
  Eigen::Vector3d back_project(const Eigen::Vector2d& pixel) const;

 private:
  double fx_;
  double fy_;
  double cx_;
  double cy_;
  std::optional<Eigen::Vector2i> image_size_;
};

/// Pixel of global point `x` seen from camera pose `pose` (camera-to-world).
/// Throws NonPositiveDepth if the point is not in front of the camera.
Eigen::Vector2d project(const Pose& pose, const Eigen::Vector3d& x, const Intrinsics& k);

/// Jacobian of project(pose * exp(d), x) - observed with respect to the
/// right-perturbation twist d at d = 0.
Eigen::Matrix<double, 2, 6> right_jacobian_residual(const Pose& pose, const Eigen::Vector3d& x,
                                                    const Intrinsics& k);

/// Jacobian of the same residual with respect to the global point.
Eigen::Matrix<double, 2, 3> point_jacobian_residual(const Pose& pose, const Eigen::Vector3d& x,
                                                    const Intrinsics& k);

}  // namespace geoloc

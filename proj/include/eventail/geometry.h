#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace eventail {

/// Pinhole intrinsics. Pixel centers sit at integer coordinates.
struct CameraModel {
  double fx = 320.0;
  double fy = 320.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  /// Throws Error(kValidation) when the invariants do not hold.
  void validate() const;
  bool contains(double u, double v) const { return u >= 0.0 && v >= 0.0 && u < width && v < height; }
};

Eigen::Vector2d project(const CameraModel &cam, const Eigen::Vector3d &point);
Eigen::Vector3d backproject(const CameraModel &cam, double u, double v);

Eigen::Matrix3d skew(const Eigen::Vector3d &w);

/// exp(skew(omega) * dt), Rodrigues form with a Taylor branch for tiny angles.
Eigen::Matrix3d rotation_at(const Eigen::Vector3d &omega, double dt);

/// Camera center at relative time dt under constant linear velocity.
inline Eigen::Vector3d camera_center_at(const Eigen::Vector3d &velocity, double dt) { return velocity * dt; }

struct Twist {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
};

/// Line as direction d and moment m = P x d.
struct PluckerLine {
  Eigen::Vector3d d = Eigen::Vector3d::UnitX();
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
};

double reciprocal_product(const PluckerLine &a, const PluckerLine &b);
PluckerLine plucker_from_two_points(const Eigen::Vector3d &pa, const Eigen::Vector3d &pb);

// Minimal line form: the intersections with the planes x = -1 and x = +1.
struct TwoPointLine {
  double y_a = 0.0;
  double z_a = 0.0;
  double y_b = 0.0;
  double z_b = 0.0;

  Eigen::Vector3d point_a() const { return {-1.0, y_a, z_a}; }
  Eigen::Vector3d point_b() const { return {1.0, y_b, z_b}; }
  Eigen::Vector4d as_vector() const { return {y_a, z_a, y_b, z_b}; }
};

/// Intersects a line with the planes x = -1 and x = +1. Throws kDegenerate when d_x ~ 0.
TwoPointLine two_point_from_plucker(const PluckerLine &line);

/// Orthogonal, non-normalized basis attached to a line: e1 along the line,
/// e2 normal to the camera/line plane, e3 = e1 x e2.
struct LineFrame {
  Eigen::Vector3d e1;
  Eigen::Vector3d e2;
  Eigen::Vector3d e3;

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d r;
    r << e1, e2, e3;
    return r;
  }
};

inline constexpr double kDegenerateFrameNorm = 1e-12;

/// Throws kDegenerate when the line passes through the camera center.
LineFrame line_frame(const TwoPointLine &line);

/// Non-minimal incidence residual <d, (v t') x f'> + <f', m>.
double incidence_residual_nonminimal(const PluckerLine &line, const Eigen::Vector3d &velocity,
                                     const Eigen::Vector3d &bearing, double t_rel);

}  // namespace eventail

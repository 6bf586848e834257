#pragma once

#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace eventail {

// All motions are parametrized by absolute time t in seconds. Orientations map
// camera coordinates to world coordinates, linear quantities are world-frame
// and angular rates are body-frame.

struct ConstantTwist {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d p0 = Eigen::Vector3d::Zero();
  Eigen::Matrix3d r0 = Eigen::Matrix3d::Identity();
};

/// Constant-orientation motion on a circle passing p0 at t = 0 with direction `tangent`.
struct CircularArc {
  double radius = 2.0;
  double tangential_speed = 1.0;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitY();
  Eigen::Vector3d tangent = Eigen::Vector3d::UnitX();
  Eigen::Vector3d p0 = Eigen::Vector3d::Zero();
  Eigen::Matrix3d r0 = Eigen::Matrix3d::Identity();
};

struct ConstantAccel {
  Eigen::Vector3d v0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d p0 = Eigen::Vector3d::Zero();
  Eigen::Matrix3d r0 = Eigen::Matrix3d::Identity();
};

/// Cubic Hermite positions (finite-difference tangents) and slerped orientations.
struct SplineMotion {
  std::vector<double> times;
  std::vector<Eigen::Vector3d> positions;
  std::vector<Eigen::Quaterniond> orientations;
};

using MotionModel = std::variant<ConstantTwist, CircularArc, ConstantAccel, SplineMotion>;

struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// Throws kValidation on invalid parameters (non-positive radius, unsorted knots, ...).
void validate(const MotionModel &motion);

/// Throws kDomain outside the spline knots.
Pose pose_at(const MotionModel &motion, double t);
Eigen::Vector3d velocity_at(const MotionModel &motion, double t);
Eigen::Vector3d omega_at(const MotionModel &motion, double t);
Eigen::Vector3d acceleration_at(const MotionModel &motion, double t);

/// Velocity expressed in the camera frame at time t.
Eigen::Vector3d body_velocity_at(const MotionModel &motion, double t);

}  // namespace eventail

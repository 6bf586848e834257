#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Geometry>

#include "eventail/events.h"

namespace eventail {

/// Ground-truth pose and world-frame velocity. `q` rotates camera to world.
struct TrajectorySample {
  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
};

// CSV formats (header line first, one record per row):
//   events      t_us,u,v,p
//   imu         t_us,wx,wy,wz,ax,ay,az
//   trajectory  t_us,px,py,pz,qx,qy,qz,qw,vx,vy,vz
//   labels      event_index,segment_index
// Floating values are written with 17 significant digits so a read/write
// cycle is lossless. Timestamps must be non-decreasing.

std::vector<Event> read_events(const std::filesystem::path &path);
void write_events(const std::filesystem::path &path, const std::vector<Event> &events);

std::vector<ImuSample> read_imu(const std::filesystem::path &path);
void write_imu(const std::filesystem::path &path, const std::vector<ImuSample> &samples);

std::vector<TrajectorySample> read_trajectory(const std::filesystem::path &path);
void write_trajectory(const std::filesystem::path &path, const std::vector<TrajectorySample> &samples);

std::vector<int> read_labels(const std::filesystem::path &path);
void write_labels(const std::filesystem::path &path, const std::vector<int> &labels);

/// Velocity of the camera expressed in its own frame at time t (linear
/// velocity interpolation, slerp on orientation). Throws kDomain outside the samples.
Eigen::Vector3d camera_frame_velocity(const std::vector<TrajectorySample> &trajectory, double t);

}  // namespace eventail

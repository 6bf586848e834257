#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "eventail/geometry.h"

namespace eventail {

/// Raw sensor event. Polarity is carried through but never used.
struct Event {
  std::int64_t t_us = 0;
  double u = 0.0;
  double v = 0.0;
  int p = 1;

  double t_sec() const { return static_cast<double>(t_us) * 1e-6; }
  bool operator==(const Event &) const = default;
};

/// Unrotated unit bearing with time relative to the window reference.
struct BearingEvent {
  Eigen::Vector3d f_prime = Eigen::Vector3d::UnitZ();
  double t_prime = 0.0;
};

struct TimeWindow {
  double t_s = 0.0;
  double delta_t = 0.15;

  double begin() const { return t_s - delta_t; }
  double end() const { return t_s + delta_t; }
};

struct EventSet {
  std::vector<BearingEvent> events;
  std::vector<int> labels;  // empty, or one per event (-1 = unlabeled)

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
  const BearingEvent &operator[](std::size_t i) const { return events[i]; }

  EventSet subset(std::span<const std::size_t> indices) const;
};

struct ImuSample {
  double t = 0.0;
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();
};

/// Events with t in [t_s - dt, t_s + dt]. The stream must be time-sorted.
std::vector<Event> window_events(std::span<const Event> stream, const TimeWindow &window);

/// Consecutive non-overlapping windows of `width` seconds starting at the first
/// event; each event lands in exactly one window (half-open, last one closed).
std::vector<TimeWindow> split_windows(std::span<const Event> stream, double width);
std::vector<Event> events_in(std::span<const Event> stream, const TimeWindow &window, bool include_end);

/// Keeps every k-th event of the (time-sorted) stream.
std::vector<Event> downsample(std::span<const Event> stream, int factor);

/// Zero-order-hold gyro integration relative to a reference time t_s.
/// rotation(t) maps camera-at-t coordinates to camera-at-t_s coordinates.
class GyroIntegrator {
 public:
  GyroIntegrator(std::span<const ImuSample> gyro, double t_s);
  Eigen::Matrix3d rotation(double t) const;

 private:
  struct Knot {
    double t;
    Eigen::Matrix3d rotation;  // accumulated rotation at knot time
    Eigen::Vector3d omega;     // held rate after the knot (before it, for knots left of t_s)
  };
  double t_s_;
  Eigen::Vector3d omega_ref_;
  std::vector<Knot> forward_;   // knots with t > t_s, increasing time
  std::vector<Knot> backward_;  // knots with t <= t_s, decreasing time
};

/// Maps pixel events to unrotated bearings relative to the window center.
/// Throws kMissingImu on an empty gyro stream.
EventSet unrotate_events(std::span<const Event> events, std::span<const ImuSample> gyro, const TimeWindow &window,
                         const CameraModel &cam);

}  // namespace eventail

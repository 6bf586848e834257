#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eventail/event_io.h"
#include "eventail/events.h"
#include "eventail/geometry.h"
#include "eventail/model.h"
#include "eventail/motion.h"
#include "eventail/rng.h"

namespace eventail {

struct Segment {
  Eigen::Vector3d a;
  Eigen::Vector3d b;
};

struct Wireframe {
  std::vector<Segment> segments;
};

struct SceneSpec {
  Eigen::Vector3d lo{-2.0, -2.0, 1.5};
  Eigen::Vector3d hi{2.0, 2.0, 3.0};
  int count = 10;
  double min_length = 0.0;  // rejection-sample shorter segments
};

/// Seeded uniform segment endpoints inside the box. Throws kValidation on an
/// empty box or count < 1.
Wireframe generate_scene(const SceneSpec &spec, std::uint64_t seed);

struct ImuModel {
  double rate = 200.0;
  Eigen::Vector3d gyro_bias0 = Eigen::Vector3d::Zero();
  double gyro_bias_random_walk = 0.0;  // rad/s/sqrt(s)
  double gyro_noise = 0.0;             // rad/s
  Eigen::Vector3d accel_bias0 = Eigen::Vector3d::Zero();
  double accel_bias_random_walk = 0.0;
  double accel_noise = 0.0;

  void validate() const;
};

struct NoiseSpec {
  double pixel_magnitude = 0.0;  // px, random direction
  double timestamp_std = 0.0;    // s, Gaussian
  double omega_magnitude = 0.0;  // rad/s, random direction

  void validate() const;
  bool is_zero() const { return pixel_magnitude == 0.0 && timestamp_std == 0.0 && omega_magnitude == 0.0; }
};

struct SimulatedEvents {
  std::vector<Event> events;
  std::vector<int> labels;  // source segment per event
};

/// Emits an event whenever the projection of a segment sweeps across a pixel
/// center. Crossing times are found by bracketing on a time grid that bounds the
/// image motion to < 0.5 px per step and refined by bisection; the timestamp is
/// then quantized to `resolution` seconds and the pixel center is snapped onto
/// the projected line at that quantized time, so every event is exact.
SimulatedEvents simulate_events(const Wireframe &scene, const MotionModel &motion, const CameraModel &cam, double t0,
                                double t1, double resolution = 1e-6);

/// Gyro = true rate + random-walk bias + white noise; accelerometer = specific
/// force with analogous errors. Samples at t0 + k / rate for t < t1.
std::vector<ImuSample> simulate_imu(const MotionModel &motion, const ImuModel &imu, double t0, double t1,
                                    std::uint64_t seed);

/// Ground-truth poses and world velocities at t0 + k / rate, t1 included.
std::vector<TrajectorySample> sample_trajectory(const MotionModel &motion, double t0, double t1, double rate);

/// Displaces every event by exactly pixel_magnitude in a random direction and
/// jitters timestamps; the result is re-sorted by time (stable). When `order`
/// is non-null it receives the source index of each output event.
std::vector<Event> corrupt(const std::vector<Event> &events, const NoiseSpec &spec, std::uint64_t seed,
                           std::vector<std::size_t> *order = nullptr);

/// Adds a fixed-magnitude, randomly directed error to each gyro reading.
std::vector<ImuSample> corrupt_gyro(const std::vector<ImuSample> &samples, double omega_magnitude,
                                    std::uint64_t seed);

Eigen::Vector3d random_unit_vector(Rng &rng);

// ---------------------------------------------------------------------------
// Single-line problem instances with an analytic event sampler.

enum class SamplingStrategy { kRandom, kTemporal, kSpatial, kSpatiotemporal };

const char *to_string(SamplingStrategy s);
SamplingStrategy sampling_from_string(const std::string &name);

/// Continuous (unquantized) pixel event; t is relative to the reference time.
struct PixelSample {
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;
};

/// A line observed by a camera with constant twist over [-half_window, half_window].
/// The reference camera frame is the frame at t = 0.
struct SingleLineInstance {
  Eigen::Vector3d a;  // segment endpoints, reference frame
  Eigen::Vector3d b;
  Twist twist;  // v in the reference frame (m/s), omega body rate (rad/s)
  CameraModel camera;
  double half_window = 0.25;

  PluckerLine line() const { return plucker_from_two_points(a, b); }

  /// Point of the segment at parameter s in [0, 1], seen at time t.
  PixelSample observe(double s, double t) const;

  /// Ground-truth sampler: n events drawn with the given strategy over the true segment.
  std::vector<PixelSample> sample(SamplingStrategy strategy, int n, Rng &rng) const;

  /// Applies pixel/timestamp noise, then unrotates with omega + omega_error.
  EventSet to_bearings(const std::vector<PixelSample> &samples, const NoiseSpec &noise, Rng &rng) const;
};

/// Random instance: two random image lines at the window ends, triangulated under
/// a 1 m/s, 90 deg/s twist; resampled until the segment stays in front of the
/// camera and its projection sweeps at least a quarter of the canvas diagonal.
SingleLineInstance single_line_instance(std::uint64_t seed);

}  // namespace eventail

#include "eventail/events.h"

#include <algorithm>
#include <cmath>

#include "eventail/errors.h"

namespace eventail {

EventSet EventSet::subset(std::span<const std::size_t> indices) const {
  EventSet out;
  out.events.reserve(indices.size());
  for (std::size_t i : indices) out.events.push_back(events[i]);
  if (!labels.empty()) {
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) out.labels.push_back(labels[i]);
  }
  return out;
}

namespace {

std::int64_t to_us_floor(double t) { return static_cast<std::int64_t>(std::floor(t * 1e6 + 1e-6)); }
std::int64_t to_us_ceil(double t) { return static_cast<std::int64_t>(std::ceil(t * 1e6 - 1e-6)); }

}  // namespace

std::vector<Event> events_in(std::span<const Event> stream, const TimeWindow &window, bool include_end) {
  const std::int64_t lo = to_us_ceil(window.begin());
  const std::int64_t hi = to_us_floor(window.end());
  auto first = std::lower_bound(stream.begin(), stream.end(), lo,
                                [](const Event &e, std::int64_t t) { return e.t_us < t; });
  auto last = include_end ? std::upper_bound(first, stream.end(), hi,
                                             [](std::int64_t t, const Event &e) { return t < e.t_us; })
                          : std::lower_bound(first, stream.end(), hi,
                                             [](const Event &e, std::int64_t t) { return e.t_us < t; });
  return {first, last};
}

std::vector<Event> window_events(std::span<const Event> stream, const TimeWindow &window) {
  return events_in(stream, window, true);
}

std::vector<TimeWindow> split_windows(std::span<const Event> stream, double width) {
  if (!(width > 0.0)) throw Error(ErrorKind::kValidation, "split_windows: width must be positive");
  std::vector<TimeWindow> windows;
  if (stream.empty()) return windows;
  const std::int64_t width_us = std::llround(width * 1e6);
  const std::int64_t start = stream.front().t_us;
  const std::int64_t stop = stream.back().t_us;
  for (std::int64_t b = start; b <= stop; b += width_us) {
    windows.push_back({(static_cast<double>(b) + 0.5 * static_cast<double>(width_us)) * 1e-6, 0.5 * width});
  }
  return windows;
}

std::vector<Event> downsample(std::span<const Event> stream, int factor) {
  if (factor < 1) throw Error(ErrorKind::kValidation, "downsample: factor must be >= 1");
  std::vector<Event> out;
  out.reserve(stream.size() / static_cast<std::size_t>(factor) + 1);
  for (std::size_t i = 0; i < stream.size(); i += static_cast<std::size_t>(factor)) out.push_back(stream[i]);
  return out;
}

GyroIntegrator::GyroIntegrator(std::span<const ImuSample> gyro, double t_s) : t_s_(t_s) {
  if (gyro.empty()) throw Error(ErrorKind::kMissingImu, "gyro stream is empty");
  const auto n = static_cast<std::ptrdiff_t>(gyro.size());
  // last sample at or before t_s
  std::ptrdiff_t idx = -1;
  for (std::ptrdiff_t k = 0; k < n && gyro[k].t <= t_s; ++k) idx = k;
  omega_ref_ = idx >= 0 ? gyro[idx].omega : gyro.front().omega;

  Eigen::Matrix3d acc = Eigen::Matrix3d::Identity();
  double t_prev = t_s;
  Eigen::Vector3d rate = omega_ref_;
  for (std::ptrdiff_t k = idx + 1; k < n; ++k) {
    acc = acc * rotation_at(rate, gyro[k].t - t_prev);
    forward_.push_back({gyro[k].t, acc, gyro[k].omega});
    t_prev = gyro[k].t;
    rate = gyro[k].omega;
  }

  acc.setIdentity();
  t_prev = t_s;
  for (std::ptrdiff_t k = idx; k >= 0; --k) {
    acc = acc * rotation_at(gyro[k].omega, gyro[k].t - t_prev);
    const Eigen::Vector3d left = k > 0 ? gyro[k - 1].omega : gyro.front().omega;
    backward_.push_back({gyro[k].t, acc, left});
    t_prev = gyro[k].t;
  }
}

Eigen::Matrix3d GyroIntegrator::rotation(double t) const {
  if (t >= t_s_) {
    auto it = std::upper_bound(forward_.begin(), forward_.end(), t,
                               [](double x, const Knot &k) { return x < k.t; });
    if (it == forward_.begin()) return rotation_at(omega_ref_, t - t_s_);
    --it;
    return it->rotation * rotation_at(it->omega, t - it->t);
  }
  // backward_ is ordered by decreasing time; find the last knot with k.t >= t
  auto it = std::partition_point(backward_.begin(), backward_.end(), [t](const Knot &k) { return k.t >= t; });
  if (it == backward_.begin()) return rotation_at(omega_ref_, t - t_s_);
  --it;
  return it->rotation * rotation_at(it->omega, t - it->t);
}

EventSet unrotate_events(std::span<const Event> events, std::span<const ImuSample> gyro, const TimeWindow &window,
                         const CameraModel &cam) {
  const GyroIntegrator integrator(gyro, window.t_s);
  EventSet out;
  out.events.reserve(events.size());
  for (const Event &e : events) {
    const double t = e.t_sec();
    BearingEvent b;
    b.f_prime = integrator.rotation(t) * backproject(cam, e.u, e.v);
    b.t_prime = t - window.t_s;
    out.events.push_back(b);
  }
  return out;
}

}  // namespace eventail

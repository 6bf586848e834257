#pragma once

#include <vector>

#include <Eigen/Core>

#include "eventail/events.h"
#include "eventail/geometry.h"
#include "eventail/rng.h"

namespace fixtures {

// Exact unrotated bearing of the point a + s (b - a) seen at relative time t
// from a camera translating with constant velocity v.
inline eventail::BearingEvent exact_event(const Eigen::Vector3d &a, const Eigen::Vector3d &b,
                                          const Eigen::Vector3d &v, double s, double t) {
  const Eigen::Vector3d p = a + s * (b - a) - v * t;
  return {p.normalized(), t};
}

struct Scene {
  Eigen::Vector3d a, b, v;
};

// A line 2-5 m in front of the camera with a unit-speed velocity.
inline Scene random_scene(eventail::Rng &rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Scene s;
  s.a = Eigen::Vector3d(u(rng), u(rng), 3.5 + 1.5 * u(rng));
  s.b = s.a + Eigen::Vector3d(1.5 * u(rng), 1.5 * u(rng), 0.5 * u(rng));
  s.v = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
  return s;
}

// Working frame looking at the segment's midpoint with x along its image direction,
// which keeps the two-point form well scaled.
inline Eigen::Matrix3d aligned_frame(const Eigen::Vector3d &a, const Eigen::Vector3d &b) {
  const Eigen::Vector3d z = (a + b).normalized();
  const Eigen::Vector3d x = ((b - a) - (b - a).dot(z) * z).normalized();
  Eigen::Matrix3d r;
  r << x, z.cross(x), z;
  return r;
}

inline std::vector<eventail::BearingEvent> exact_events(const Scene &s, int n, eventail::Rng &rng,
                                                        double half_window = 0.25) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<eventail::BearingEvent> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(exact_event(s.a, s.b, s.v, unit(rng), half_window * (2.0 * unit(rng) - 1.0)));
  }
  return out;
}

}  // namespace fixtures

#include "eventail/motion.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "eventail/errors.h"
#include "eventail/geometry.h"

namespace eventail {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct ArcBasis {
  Eigen::Vector3d u, w, center;
  double rate;  // angular rate of the position about the center
};

ArcBasis arc_basis(const CircularArc &arc) {
  const Eigen::Vector3d u = arc.tangent.normalized();
  const Eigen::Vector3d n = (arc.normal - arc.normal.dot(u) * u).normalized();
  const Eigen::Vector3d w = n.cross(u);
  return {u, w, arc.p0 + arc.radius * w, arc.tangential_speed / arc.radius};
}

struct SplineSegment {
  std::size_t k;
  double s;   // normalized position in [0, 1]
  double dt;  // knot spacing
};

SplineSegment locate(const SplineMotion &spline, double t) {
  const auto &ts = spline.times;
  if (t < ts.front() || t > ts.back()) {
    throw Error(ErrorKind::kDomain, "spline motion evaluated outside its knots at t = " + std::to_string(t));
  }
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t k = static_cast<std::size_t>(std::distance(ts.begin(), it));
  k = std::clamp<std::size_t>(k, 1, ts.size() - 1) - 1;
  const double dt = ts[k + 1] - ts[k];
  return {k, (t - ts[k]) / dt, dt};
}

Eigen::Vector3d spline_tangent(const SplineMotion &spline, std::size_t k) {
  const auto &ts = spline.times;
  const auto &ps = spline.positions;
  const std::size_t last = ts.size() - 1;
  if (k == 0) return (ps[1] - ps[0]) / (ts[1] - ts[0]);
  if (k == last) return (ps[last] - ps[last - 1]) / (ts[last] - ts[last - 1]);
  return (ps[k + 1] - ps[k - 1]) / (ts[k + 1] - ts[k - 1]);
}

// Derivative `order` (0, 1, 2) of the Hermite segment.
Eigen::Vector3d spline_position(const SplineMotion &spline, double t, int order) {
  const SplineSegment seg = locate(spline, t);
  const double s = seg.s;
  const Eigen::Vector3d &p0 = spline.positions[seg.k];
  const Eigen::Vector3d &p1 = spline.positions[seg.k + 1];
  const Eigen::Vector3d m0 = spline_tangent(spline, seg.k) * seg.dt;
  const Eigen::Vector3d m1 = spline_tangent(spline, seg.k + 1) * seg.dt;
  double h00, h10, h01, h11;
  if (order == 0) {
    h00 = 2 * s * s * s - 3 * s * s + 1;
    h10 = s * s * s - 2 * s * s + s;
    h01 = -2 * s * s * s + 3 * s * s;
    h11 = s * s * s - s * s;
  } else if (order == 1) {
    h00 = 6 * s * s - 6 * s;
    h10 = 3 * s * s - 4 * s + 1;
    h01 = -6 * s * s + 6 * s;
    h11 = 3 * s * s - 2 * s;
  } else {
    h00 = 12 * s - 6;
    h10 = 6 * s - 4;
    h01 = -12 * s + 6;
    h11 = 6 * s - 2;
  }
  const double scale = std::pow(seg.dt, -order);
  return scale * (h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1);
}

Eigen::Vector3d spline_rotation_vector(const SplineMotion &spline, std::size_t k) {
  const Eigen::Quaterniond rel = spline.orientations[k].conjugate() * spline.orientations[k + 1];
  const Eigen::AngleAxisd aa(rel.normalized());
  return aa.angle() * aa.axis();
}

}  // namespace

void validate(const MotionModel &motion) {
  std::visit(Overloaded{
                 [](const ConstantTwist &) {},
                 [](const ConstantAccel &) {},
                 [](const CircularArc &arc) {
                   if (!(arc.radius > 0.0)) throw Error(ErrorKind::kValidation, "circular arc radius must be > 0");
                   if (arc.tangent.norm() == 0.0 || arc.normal.cross(arc.tangent).norm() < 1e-9) {
                     throw Error(ErrorKind::kValidation, "circular arc needs a tangent not parallel to the normal");
                   }
                 },
                 [](const SplineMotion &s) {
                   if (s.times.size() < 2 || s.positions.size() != s.times.size() ||
                       s.orientations.size() != s.times.size()) {
                     throw Error(ErrorKind::kValidation, "spline needs >= 2 knots with matching poses");
                   }
                   for (std::size_t i = 1; i < s.times.size(); ++i) {
                     if (!(s.times[i] > s.times[i - 1])) {
                       throw Error(ErrorKind::kValidation, "spline knot times must be strictly increasing");
                     }
                   }
                 },
             },
             motion);
}

Pose pose_at(const MotionModel &motion, double t) {
  return std::visit(
      Overloaded{
          [t](const ConstantTwist &m) { return Pose{m.r0 * rotation_at(m.omega, t), m.p0 + m.v * t}; },
          [t](const ConstantAccel &m) {
            return Pose{m.r0 * rotation_at(m.omega, t), m.p0 + m.v0 * t + 0.5 * m.a * t * t};
          },
          [t](const CircularArc &m) {
            const ArcBasis b = arc_basis(m);
            const double theta = b.rate * t;
            return Pose{m.r0, b.center + m.radius * (-b.w * std::cos(theta) + b.u * std::sin(theta))};
          },
          [t](const SplineMotion &m) {
            const SplineSegment seg = locate(m, t);
            const Eigen::Quaterniond q = m.orientations[seg.k].slerp(seg.s, m.orientations[seg.k + 1]);
            return Pose{q.normalized().toRotationMatrix(), spline_position(m, t, 0)};
          },
      },
      motion);
}

Eigen::Vector3d velocity_at(const MotionModel &motion, double t) {
  return std::visit(Overloaded{
                        [](const ConstantTwist &m) -> Eigen::Vector3d { return m.v; },
                        [t](const ConstantAccel &m) -> Eigen::Vector3d { return m.v0 + m.a * t; },
                        [t](const CircularArc &m) -> Eigen::Vector3d {
                          const ArcBasis b = arc_basis(m);
                          const double theta = b.rate * t;
                          return m.tangential_speed * (b.w * std::sin(theta) + b.u * std::cos(theta));
                        },
                        [t](const SplineMotion &m) -> Eigen::Vector3d { return spline_position(m, t, 1); },
                    },
                    motion);
}

Eigen::Vector3d omega_at(const MotionModel &motion, double t) {
  return std::visit(Overloaded{
                        [](const ConstantTwist &m) -> Eigen::Vector3d { return m.omega; },
                        [](const ConstantAccel &m) -> Eigen::Vector3d { return m.omega; },
                        [](const CircularArc &) -> Eigen::Vector3d { return Eigen::Vector3d::Zero(); },
                        [t](const SplineMotion &m) -> Eigen::Vector3d {
                          const SplineSegment seg = locate(m, t);
                          return spline_rotation_vector(m, seg.k) / seg.dt;
                        },
                    },
                    motion);
}

Eigen::Vector3d acceleration_at(const MotionModel &motion, double t) {
  return std::visit(Overloaded{
                        [](const ConstantTwist &) -> Eigen::Vector3d { return Eigen::Vector3d::Zero(); },
                        [](const ConstantAccel &m) -> Eigen::Vector3d { return m.a; },
                        [t](const CircularArc &m) -> Eigen::Vector3d {
                          const ArcBasis b = arc_basis(m);
                          const double theta = b.rate * t;
                          return m.tangential_speed * b.rate * (b.w * std::cos(theta) - b.u * std::sin(theta));
                        },
                        [t](const SplineMotion &m) -> Eigen::Vector3d { return spline_position(m, t, 2); },
                    },
                    motion);
}

Eigen::Vector3d body_velocity_at(const MotionModel &motion, double t) {
  return pose_at(motion, t).rotation.transpose() * velocity_at(motion, t);
}

}  // namespace eventail

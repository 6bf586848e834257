// Multi-start damped Gauss-Newton over the raw polynomial system. Shares no
// code path with solve_minimal beyond precondition_frame().

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "eventail/errors.h"
#include "eventail/rng.h"
#include "eventail/solver.h"

namespace eventail {
namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct System {
  std::array<Eigen::Vector3d, 5> bearings;  // working frame
  std::array<double, 5> times;

  // x = (y_a, z_a, y_b, z_b, v_y, v_z)
  Vec6 residual(const Vec6 &x) const {
    const Eigen::Vector3d pa(-1.0, x(0), x(1));
    const Eigen::Vector3d pb(1.0, x(2), x(3));
    const Eigen::Vector3d e1 = pb - pa;
    const Eigen::Vector3d e2 = pb.cross(pa);
    const Eigen::Vector3d e3 = e1.cross(e2);
    const Eigen::Vector3d v = e2 * x(4) + e3 * x(5);
    Vec6 r;
    for (int j = 0; j < 5; ++j) {
      const auto &f = bearings[static_cast<std::size_t>(j)];
      r(j) = times[static_cast<std::size_t>(j)] * e1.dot(v.cross(f)) - f.dot(e2);
    }
    r(5) = v.squaredNorm() - 1.0;
    return r;
  }

  Mat6 jacobian(const Vec6 &x) const {
    Mat6 jac;
    for (int k = 0; k < 6; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(x(k)));
      Vec6 xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      jac.col(k) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    return jac;
  }
};

bool refine(const System &sys, Vec6 &x, int max_iterations, double tolerance, bool patient) {
  double lambda = 1e-3;
  Vec6 r = sys.residual(x);
  double cost = r.squaredNorm();
  double checkpoint = cost;
  for (int it = 0; it < max_iterations; ++it) {
    // give up on random starts that stall far from a root. Near a root of an
    // ill-conditioned instance progress along the flat valley is slow but steady.
    if (!patient && it % 100 == 99) {
      if (cost > 0.999 * checkpoint && cost > 1e-8) break;
      checkpoint = cost;
    }
    if (r.cwiseAbs().maxCoeff() < 1e-14) break;
    const Mat6 jac = sys.jacobian(x);
    const Mat6 h = jac.transpose() * jac;
    const Vec6 g = jac.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 12 && !improved; ++attempt) {
      Mat6 damped = h;
      damped.diagonal() += lambda * (h.diagonal().array() + 1e-12).matrix();
      const Vec6 step = damped.ldlt().solve(-g);
      const Vec6 candidate = x + step;
      const Vec6 rc = sys.residual(candidate);
      const double cc = rc.squaredNorm();
      if (std::isfinite(cc) && cc < cost) {
        x = candidate;
        r = rc;
        cost = cc;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
      } else {
        lambda *= 4.0;
      }
    }
    if (!improved || x.cwiseAbs().maxCoeff() > 1e6) break;
  }
  return std::isfinite(cost) && r.cwiseAbs().maxCoeff() < tolerance;
}

// Two-point coordinates of the line through p and q, or nullopt if it runs
// nearly parallel to the planes x = +-1.
std::optional<Eigen::Vector4d> two_point(const Eigen::Vector3d &p, const Eigen::Vector3d &q) {
  const Eigen::Vector3d d = q - p;
  if (std::abs(d.x()) < 0.2 * d.norm()) return std::nullopt;
  const Eigen::Vector3d a = p + (-1.0 - p.x()) / d.x() * d;
  const Eigen::Vector3d b = p + (1.0 - p.x()) / d.x() * d;
  return Eigen::Vector4d(a.y(), a.z(), b.y(), b.z());
}

// For a fixed line the incidence equations are linear in (v_y, v_z). Returns the
// least-squares start and its relative residual.
std::pair<Vec6, double> velocity_for_line(const System &sys, const Eigen::Vector4d &line) {
  const Eigen::Vector3d pa(-1.0, line(0), line(1));
  const Eigen::Vector3d pb(1.0, line(2), line(3));
  const Eigen::Vector3d e1 = pb - pa;
  const Eigen::Vector3d e2 = pb.cross(pa);
  const Eigen::Vector3d e3 = e1.cross(e2);
  Eigen::Matrix<double, 5, 2> a;
  Eigen::Matrix<double, 5, 1> rhs;
  for (std::size_t j = 0; j < 5; ++j) {
    const auto &f = sys.bearings[j];
    a(static_cast<Eigen::Index>(j), 0) = sys.times[j] * e1.dot(e2.cross(f));
    a(static_cast<Eigen::Index>(j), 1) = sys.times[j] * e1.dot(e3.cross(f));
    rhs(static_cast<Eigen::Index>(j)) = f.dot(e2);
  }
  const Eigen::Vector2d w = a.colPivHouseholderQr().solve(rhs);
  Vec6 x;
  x << line, w;
  const double scale = rhs.norm();
  const double rel = scale > 0.0 && w.allFinite() ? (a * w - rhs).norm() / scale : 1.0;
  return {x, rel};
}

double velocity_norm(const Vec6 &x) {
  const Eigen::Vector3d pa(-1.0, x(0), x(1));
  const Eigen::Vector3d pb(1.0, x(2), x(3));
  const Eigen::Vector3d e2 = pb.cross(pa);
  return (e2 * x(4) + (pb - pa).cross(e2) * x(5)).norm();
}

struct Start {
  Vec6 x;
  double score;
  int frame;
};

// Lines through two of the event rays at a grid of depth ratios, as if the
// camera stood still between the two events. Ratios at which the linear velocity
// fit explains all five events best make approximate starts; for long event spans
// they are poor, which the random starts cover.
std::vector<Start> ray_pair_starts(const std::vector<System> &systems, int limit) {
  constexpr int kGrid = 160;
  std::vector<Start> starts;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) {
      for (double sign : {1.0, -1.0}) {
        std::vector<double> ratios, speeds, scores;
        std::vector<Vec6> xs;
        std::vector<int> frames;
        for (int g = 0; g < kGrid; ++g) {
          const double ratio = sign * std::exp(std::log(0.02) + (std::log(50.0) - std::log(0.02)) * g / (kGrid - 1));
          // use the working frame that crosses the line most steeply
          int frame = 0;
          for (std::size_t fi = 1; fi < systems.size(); ++fi) {
            const auto steepness = [&](std::size_t k) {
              const Eigen::Vector3d d = ratio * systems[k].bearings[j] - systems[k].bearings[i];
              return std::abs(d.x()) / d.norm();
            };
            if (steepness(fi) > steepness(static_cast<std::size_t>(frame))) frame = static_cast<int>(fi);
          }
          const System &sys = systems[static_cast<std::size_t>(frame)];
          double best = 2.0, unit_speed = 1.0;
          Vec6 best_x = Vec6::Zero();
          const Eigen::Vector3d p = sys.bearings[i], q = ratio * sys.bearings[j];
          if (const auto line = two_point(p, q)) {
            const auto [x, rel] = velocity_for_line(sys, *line);
            const double speed = velocity_norm(x);
            // scene and velocity scale together; shrink the line to unit speed
            if (rel < 0.1 && speed > 0.0 && std::isfinite(speed)) {
              unit_speed = speed;
              if (const auto unit = two_point(p / speed, q / speed)) {
                std::tie(best_x, best) = velocity_for_line(sys, *unit);
              }
            } else {
              best = rel;
            }
          }
          scores.push_back(best);
          xs.push_back(best_x);
          frames.push_back(frame);
          ratios.push_back(ratio);
          speeds.push_back(unit_speed);
        }
        for (int g = 0; g < kGrid; ++g) {
          const double left = g > 0 ? scores[static_cast<std::size_t>(g - 1)] : 2.0;
          const double right = g + 1 < kGrid ? scores[static_cast<std::size_t>(g + 1)] : 2.0;
          const auto k = static_cast<std::size_t>(g);
          if (scores[k] < 0.1 && scores[k] <= left && scores[k] <= right) {
            starts.push_back({xs[k], scores[k], frames[k]});
            // the same line mirrored through the camera center is just as consistent
            const System &sys = systems[static_cast<std::size_t>(frames[k])];
            if (const auto mirrored = two_point(-sys.bearings[i] / speeds[k], -ratios[k] * sys.bearings[j] / speeds[k])) {
              const auto [x, rel] = velocity_for_line(sys, *mirrored);
              starts.push_back({x, rel, frames[k]});
            }
          }
        }
      }
    }
  }
  std::sort(starts.begin(), starts.end(), [](const Start &a, const Start &b) { return a.score < b.score; });
  if (static_cast<int>(starts.size()) > limit) starts.resize(static_cast<std::size_t>(limit));
  return starts;
}

}  // namespace

std::vector<EventailModel> oracle_solve(std::span<const BearingEvent> events, const OracleOptions &options) {
  std::vector<EventailModel> roots;
  if (events.size() != 5) throw Error(ErrorKind::kInsufficientData, "oracle_solve: exactly five events required");
  Eigen::Matrix3d base;
  try {
    base = precondition_frame(events);
  } catch (const Error &) {
    return roots;
  }

  // Working frames whose x-axes spread over the sphere, so that at least one
  // cuts the line at a steep angle and keeps the root parameters moderate.
  const Eigen::Vector3d ex = Eigen::Vector3d::UnitX(), ey = Eigen::Vector3d::UnitY(), ez = Eigen::Vector3d::UnitZ();
  const std::array<Eigen::Vector3d, 9> axes{ex,
                                            ey,
                                            ez,
                                            (ex + ey).normalized(),
                                            (ex - ey).normalized(),
                                            (ex + ez).normalized(),
                                            (ex - ez).normalized(),
                                            (ey + ez).normalized(),
                                            (ey - ez).normalized()};
  std::vector<System> systems;
  std::vector<Eigen::Matrix3d> frames;
  for (const auto &axis : axes) {
    frames.push_back(base * Eigen::Quaterniond::FromTwoVectors(ex, axis).toRotationMatrix());
    System sys;
    for (std::size_t j = 0; j < 5; ++j) {
      sys.bearings[j] = frames.back().transpose() * events[j].f_prime;
      sys.times[j] = events[j].t_prime;
    }
    systems.push_back(sys);
  }

  const auto try_start = [&](Vec6 x, std::size_t fi, bool patient) {
    const int budget = patient ? 10 * options.max_iterations : options.max_iterations;
    if (!refine(systems[fi], x, budget, options.residual_tolerance, patient)) return;
    EventailModel model;
    model.line = {x(0), x(1), x(2), x(3)};
    model.v_y = x(4);
    model.v_z = x(5);
    model.precondition_rotation = frames[fi];
    try {
      line_frame(model.line);
    } catch (const Error &) {
      return;
    }
    bool duplicate = false;
    for (const auto &root : roots) duplicate = duplicate || same_solution(root, model, 1e-6);
    if (!duplicate) roots.push_back(model);
  };

  for (const Start &start : ray_pair_starts(systems, options.ray_starts))
    try_start(start.x, static_cast<std::size_t>(start.frame), true);

  const int per_frame = std::max(1, options.starts / static_cast<int>(frames.size()));
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    for (int s = 0; s < per_frame; ++s) {
      Rng rng = make_rng(options.seed, fi * static_cast<std::uint64_t>(per_frame) + static_cast<std::uint64_t>(s));
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      const double scale = std::exp(std::uniform_real_distribution<double>(std::log(0.2), std::log(50.0))(rng));
      Vec6 x;
      for (int k = 0; k < 4; ++k) x(k) = scale * unit(rng);
      x(4) = unit(rng) / scale;
      x(5) = unit(rng) / (scale * scale);
      try_start(x, fi, false);
    }
  }
  return roots;
}

}  // namespace eventail

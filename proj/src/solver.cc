#include "eventail/solver.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "eventail/errors.h"

namespace eventail {

Eigen::Matrix3d precondition_frame(std::span<const BearingEvent> events) {
  if (events.size() < 2) throw Error(ErrorKind::kInsufficientData, "precondition_frame: need at least two events");
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto &e : events) sum += e.f_prime;
  if (sum.norm() < 1e-12) throw Error(ErrorKind::kDegenerate, "precondition_frame: bearings cancel out");
  const Eigen::Vector3d z = sum.normalized();

  double best = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Eigen::Vector3d qi = events[i].f_prime - events[i].f_prime.dot(z) * z;
    for (std::size_t j = i + 1; j < events.size(); ++j) {
      const Eigen::Vector3d qj = events[j].f_prime - events[j].f_prime.dot(z) * z;
      const double dist = (qj - qi).norm();
      if (dist > best) {
        best = dist;
        axis = qj - qi;
      }
    }
  }
  if (best < 1e-12) throw Error(ErrorKind::kDegenerate, "precondition_frame: all bearings are identical");
  Eigen::Vector3d x = axis.normalized();
  // Orient along the camera x-axis (or y-axis when perpendicular to it).
  const double sx = x.x() - x.dot(z) * z.x();
  if (sx < -1e-9 || (std::abs(sx) <= 1e-9 && x.y() < 0.0)) x = -x;
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = z.cross(x);
  r.col(2) = z;
  return r;
}

namespace {

EventailModel oriented_model(const PluckerLine &line, const Eigen::Vector3d &velocity,
                             const Eigen::Matrix3d &working_to_camera) {
  EventailModel model;
  model.precondition_rotation = working_to_camera;
  model.line = two_point_from_plucker(line);
  const LineFrame f = line_frame(model.line);
  model.v_y = f.e2.dot(velocity) / f.e2.squaredNorm();
  model.v_z = f.e3.dot(velocity) / f.e3.squaredNorm();
  return model;
}


// (m, w) up to scale -> the two unit-velocity models, cheirality-preferred first.
std::optional<std::pair<EventailModel, EventailModel>> models_from_incidence(Eigen::Vector3d m, Eigen::Vector3d w,
                                                                             const Eigen::Matrix3d &pre,
                                                                             std::span<const BearingEvent> events) {
  Eigen::Vector3d d = m.cross(w);
  if (d.norm() <= 1e-10 * m.norm() * w.norm() || !(d.norm() > 0.0)) return std::nullopt;

  // Re-align the working x-axis with the image direction of the recovered line.
  const Eigen::Vector3d z = pre.col(2);
  Eigen::Vector3d x = d - d.dot(z) * z;
  if (x.norm() < 1e-9 * d.norm()) return std::nullopt;
  x.normalize();
  if (x.dot(pre.col(0)) < 0.0) x = -x;
  Eigen::Matrix3d frame;
  frame.col(0) = x;
  frame.col(1) = z.cross(x);
  frame.col(2) = z;

  m = frame.transpose() * m;
  w = frame.transpose() * w;
  d = frame.transpose() * d;
  const Eigen::Vector3d velocity = -d.cross(w) / d.squaredNorm();

  EventailModel base;
  try {
    base = oriented_model({d, m}, velocity, frame);
  } catch (const Error &) {
    return std::nullopt;
  }
  // Unit-velocity constraint: k^2 |v|^2 = 1 has the roots k = +-1/|v|; the
  // negative root mirrors the line through the camera center (dual solution).
  const double speed_sq = working_velocity(base).squaredNorm();
  if (!(speed_sq > 0.0) || !std::isfinite(speed_sq)) return std::nullopt;
  EventailModel first = base;
  first.line = scale_line(base.line, 1.0 / std::sqrt(speed_sq));
  EventailModel second = dual_model(first);
  if (2 * count_positive_depth(first, events) < static_cast<int>(events.size())) std::swap(first, second);
  return std::pair{first, second};
}

}  // namespace

MinimalSolution solve_minimal(std::span<const BearingEvent> events) {
  MinimalSolution out;
  if (events.size() != 5) throw Error(ErrorKind::kInsufficientData, "solve_minimal: exactly five events required");

  Eigen::Matrix3d pre;
  try {
    pre = precondition_frame(events);
  } catch (const Error &) {
    out.diagnostics.condition_estimate = std::numeric_limits<double>::infinity();
    return out;
  }

  double t_scale = 0.0;
  for (const auto &e : events) t_scale = std::max(t_scale, std::abs(e.t_prime));
  if (!(t_scale > 0.0)) {
    out.diagnostics.condition_estimate = std::numeric_limits<double>::infinity();
    return out;
  }

  // Row j: [f_j^T, (t_j / t_scale) f_j^T] * [m; t_scale * w] = 0
  Eigen::Matrix<double, 5, 6> coeffs;
  for (int j = 0; j < 5; ++j) {
    const Eigen::Vector3d f = pre.transpose() * events[static_cast<std::size_t>(j)].f_prime;
    coeffs.row(j).head<3>() = f.transpose();
    coeffs.row(j).tail<3>() = (events[static_cast<std::size_t>(j)].t_prime / t_scale) * f.transpose();
  }
  const Eigen::JacobiSVD<Eigen::Matrix<double, 5, 6>> svd(coeffs, Eigen::ComputeFullV);
  const auto &sv = svd.singularValues();
  out.diagnostics.condition_estimate =
      sv(4) > 0.0 ? sv(0) / sv(4) : std::numeric_limits<double>::infinity();
  if (!(out.diagnostics.condition_estimate <= kMaxConditionEstimate)) return out;

  const Eigen::Matrix<double, 6, 1> nullspace = svd.matrixV().col(5);
  auto pair = models_from_incidence(pre * nullspace.head<3>(), pre * nullspace.tail<3>() / t_scale, pre, events);
  if (!pair) return out;
  const auto &[first, second] = *pair;
  out.models = {first, second};
  out.diagnostics.n_solutions = 2;
  for (const auto &model : out.models) {
    for (const auto &e : events) {
      out.diagnostics.residual_max =
          std::max(out.diagnostics.residual_max, std::abs(incidence_residual_minimal(model, e.f_prime, e.t_prime)));
    }
  }
  return out;
}

PartialVelocity recover_velocity_given_line(const TwoPointLine &line, std::span<const BearingEvent> events,
                                            const Eigen::Matrix3d &working_to_camera) {
  if (events.size() < 2) throw Error(ErrorKind::kInsufficientData, "recover_velocity_given_line: need two events");
  const LineFrame frame = line_frame(line);
  const double e1_sq = frame.e1.squaredNorm();
  Eigen::MatrixX2d a(static_cast<Eigen::Index>(events.size()), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(events.size()));
  for (std::size_t j = 0; j < events.size(); ++j) {
    const Eigen::Vector3d f = working_to_camera.transpose() * events[j].f_prime;
    const double t = events[j].t_prime;
    const auto row = static_cast<Eigen::Index>(j);
    // t (v_y f.e3 - v_z |e1|^2 f.e2) = f.e2
    a(row, 0) = t * f.dot(frame.e3);
    a(row, 1) = -t * e1_sq * f.dot(frame.e2);
    b(row) = f.dot(frame.e2);
  }
  const Eigen::JacobiSVD<Eigen::MatrixX2d> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto &sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) < 1e-12 * sv(0)) {
    throw Error(ErrorKind::kUnobservable, "recover_velocity_given_line: velocity is not observable from these events");
  }
  const Eigen::Vector2d x = svd.solve(b);
  return {x(0), x(1)};
}

std::optional<EventailModel> refine_model(std::span<const BearingEvent> events, const EventailModel &initial,
                                          int iterations, double robust_scale) {
  if (events.size() < 5) throw Error(ErrorKind::kInsufficientData, "refine_model: need at least five events");
  double t_scale = 0.0;
  for (const auto &e : events) t_scale = std::max(t_scale, std::abs(e.t_prime));
  if (!(t_scale > 0.0)) return std::nullopt;

  const Eigen::Matrix3d &pre = initial.precondition_rotation;
  const PluckerLine line = camera_line(initial);
  Eigen::Vector3d m = line.m;
  Eigen::Vector3d w = line.d.cross(camera_velocity(initial));
  std::optional<EventailModel> result;
  for (int it = 0; it < iterations; ++it) {
    // weights turn the algebraic residual into the angular one of the current estimate
    Eigen::Matrix<double, 6, 6> normal = Eigen::Matrix<double, 6, 6>::Zero();
    for (const auto &e : events) {
      const Eigen::Vector3d n = m + e.t_prime * w;
      const double n_sq = n.squaredNorm();
      if (!(n_sq > 0.0)) continue;
      double weight = 1.0 / n_sq;
      if (robust_scale > 0.0) {
        // Tukey biweight on the angular residual
        const double u = std::abs(e.f_prime.dot(n)) / std::sqrt(n_sq) / robust_scale;
        if (u >= 1.0) continue;
        weight *= (1.0 - u * u) * (1.0 - u * u);
      }
      const Eigen::Vector3d f = pre.transpose() * e.f_prime;
      Eigen::Matrix<double, 6, 1> row;
      row << f, (e.t_prime / t_scale) * f;
      normal.noalias() += weight * row * row.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(normal);
    if (eig.info() != Eigen::Success) break;
    const Eigen::Matrix<double, 6, 1> x = eig.eigenvectors().col(0);
    const Eigen::Vector3d m_new = pre * x.head<3>();
    const Eigen::Vector3d w_new = pre * x.tail<3>() / t_scale;
    auto pair = models_from_incidence(m_new, w_new, pre, events);
    if (!pair) break;
    result = pair->first;
    // keep the residual-plane scale comparable between rounds
    const double s = 1.0 / std::max(m_new.norm(), 1e-300);
    m = m_new * s;
    w = w_new * s;
  }
  return result;
}

int count_positive_depth(const EventailModel &model, std::span<const BearingEvent> events) {
  const Eigen::Vector3d pa = model.line.point_a();
  const Eigen::Vector3d dir = model.line.point_b() - pa;
  const Eigen::Vector3d v = working_velocity(model);
  int positive = 0;
  for (const auto &e : events) {
    const Eigen::Vector3d f = model.precondition_rotation.transpose() * e.f_prime;
    const Eigen::Vector3d w0 = v * e.t_prime - pa;
    const double b = f.dot(dir);
    const double c = dir.squaredNorm();
    const double denom = c - b * b;  // |f| = 1
    if (std::abs(denom) < 1e-15 * c) continue;
    const double depth = (b * dir.dot(w0) - c * f.dot(w0)) / denom;
    if (depth > 0.0) ++positive;
  }
  return positive;
}

namespace {

// Line normalized to unit direction with a canonical sign, plus velocity.
Eigen::Matrix<double, 9, 1> signature(const EventailModel &model) {
  const PluckerLine l = camera_line(model);
  const double n = l.d.norm();
  Eigen::Vector3d d = l.d / n;
  Eigen::Vector3d m = l.m / n;
  Eigen::Index k = 0;
  d.cwiseAbs().maxCoeff(&k);
  if (d(k) < 0.0) {
    d = -d;
    m = -m;
  }
  Eigen::Matrix<double, 9, 1> s;
  s << d, m, camera_velocity(model);
  return s;
}

}  // namespace

bool same_solution(const EventailModel &a, const EventailModel &b, double tol) {
  return (signature(a) - signature(b)).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace eventail

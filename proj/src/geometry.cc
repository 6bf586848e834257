#include "eventail/geometry.h"

#include <cmath>
#include <sstream>

#include "eventail/errors.h"
#include "eventail/model.h"

namespace eventail {

const char *to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kBehindCamera: return "behind-camera";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kUnobservable: return "unobservable";
    case ErrorKind::kMissingImu: return "missing-imu";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

void CameraModel::validate() const {
  std::ostringstream why;
  if (!(fx > 0.0) || !(fy > 0.0)) why << "focal lengths must be positive; ";
  if (width <= 0 || height <= 0) why << "resolution must be positive; ";
  if (!(cx >= 0.0 && cx < width)) why << "cx outside [0, width); ";
  if (!(cy >= 0.0 && cy < height)) why << "cy outside [0, height); ";
  if (!why.str().empty()) throw Error(ErrorKind::kValidation, "camera: " + why.str());
}

Eigen::Vector2d project(const CameraModel &cam, const Eigen::Vector3d &point) {
  if (!(point.z() > 0.0)) throw Error(ErrorKind::kBehindCamera, "project: point is not in front of the camera");
  return {cam.fx * point.x() / point.z() + cam.cx, cam.fy * point.y() / point.z() + cam.cy};
}

Eigen::Vector3d backproject(const CameraModel &cam, double u, double v) {
  return Eigen::Vector3d((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0).normalized();
}

Eigen::Matrix3d skew(const Eigen::Vector3d &w) {
  Eigen::Matrix3d k;
  k << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return k;
}

Eigen::Matrix3d rotation_at(const Eigen::Vector3d &omega, double dt) {
  const Eigen::Vector3d phi = omega * dt;
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  if (theta < 1e-8) return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  return Eigen::Matrix3d::Identity() + (std::sin(theta) / theta) * k +
         ((1.0 - std::cos(theta)) / (theta * theta)) * k * k;
}

double reciprocal_product(const PluckerLine &a, const PluckerLine &b) { return a.d.dot(b.m) + b.d.dot(a.m); }

PluckerLine plucker_from_two_points(const Eigen::Vector3d &pa, const Eigen::Vector3d &pb) {
  const Eigen::Vector3d d = pb - pa;
  if (d.squaredNorm() == 0.0) throw Error(ErrorKind::kDegenerate, "plucker_from_two_points: coincident points");
  return {d, pa.cross(d)};
}

TwoPointLine two_point_from_plucker(const PluckerLine &line) {
  const double dn = line.d.norm();
  if (!(dn > 0.0) || std::abs(line.d.x()) < 1e-12 * dn) {
    throw Error(ErrorKind::kDegenerate, "two_point_from_plucker: line is parallel to the support planes");
  }
  const Eigen::Vector3d closest = line.d.cross(line.m) / (dn * dn);
  const Eigen::Vector3d pa = closest + ((-1.0 - closest.x()) / line.d.x()) * line.d;
  const Eigen::Vector3d pb = closest + ((1.0 - closest.x()) / line.d.x()) * line.d;
  return {pa.y(), pa.z(), pb.y(), pb.z()};
}

LineFrame line_frame(const TwoPointLine &line) {
  const Eigen::Vector3d pa = line.point_a();
  const Eigen::Vector3d pb = line.point_b();
  LineFrame frame;
  frame.e1 = pb - pa;
  frame.e2 = pb.cross(pa);
  if (frame.e2.norm() < kDegenerateFrameNorm) {
    throw Error(ErrorKind::kDegenerate, "line_frame: line passes through the camera center");
  }
  frame.e3 = frame.e1.cross(frame.e2);
  return frame;
}

double incidence_residual_nonminimal(const PluckerLine &line, const Eigen::Vector3d &velocity,
                                     const Eigen::Vector3d &bearing, double t_rel) {
  return line.d.dot((velocity * t_rel).cross(bearing)) + bearing.dot(line.m);
}

// ---------------------------------------------------------------------------
// EventailModel

Eigen::Vector3d working_velocity(const EventailModel &model) {
  const LineFrame f = line_frame(model.line);
  return f.e1 * model.kappa + f.e2 * model.v_y + f.e3 * model.v_z;
}

Eigen::Vector3d camera_velocity(const EventailModel &model) {
  return model.precondition_rotation * working_velocity(model);
}

PluckerLine camera_line(const EventailModel &model) {
  const PluckerLine w = plucker_from_two_points(model.line.point_a(), model.line.point_b());
  return {model.precondition_rotation * w.d, model.precondition_rotation * w.m};
}

LineFrame camera_frame(const EventailModel &model) {
  const LineFrame f = line_frame(model.line);
  const Eigen::Matrix3d &r = model.precondition_rotation;
  return {r * f.e1, r * f.e2, r * f.e3};
}

double scale_constraint_residual(const EventailModel &model) {
  return working_velocity(model).squaredNorm() - 1.0;
}

double incidence_residual_minimal(const EventailModel &model, const Eigen::Vector3d &bearing, double t_rel) {
  const Eigen::Vector3d f = model.precondition_rotation.transpose() * bearing;
  const Eigen::Vector3d pa = model.line.point_a();
  const Eigen::Vector3d pb = model.line.point_b();
  const Eigen::Vector3d v = working_velocity(model);
  return t_rel * (pb - pa).dot(v.cross(f)) - f.dot(pb.cross(pa));
}

double angular_line_error(const EventailModel &model, const Eigen::Vector3d &bearing, double t_rel) {
  const Eigen::Vector3d f = model.precondition_rotation.transpose() * bearing;
  const Eigen::Vector3d center = working_velocity(model) * t_rel;
  const Eigen::Vector3d normal = (model.line.point_a() - center).cross(model.line.point_b() - center);
  const double nn = normal.norm();
  if (nn < kDegenerateFrameNorm) {
    throw Error(ErrorKind::kDegenerate, "angular_line_error: camera center lies on the line");
  }
  return std::asin(std::min(1.0, std::abs(f.dot(normal)) / nn));
}

EventailModel dual_model(const EventailModel &model) {
  EventailModel dual = model;
  dual.line = {-model.line.y_b, -model.line.z_b, -model.line.y_a, -model.line.z_a};
  return dual;
}

TwoPointLine scale_line(const TwoPointLine &line, double k) {
  const Eigen::Vector3d pa = line.point_a();
  const Eigen::Vector3d pb = line.point_b();
  const Eigen::Vector3d mid = 0.5 * k * (pa + pb);
  const Eigen::Vector3d half = 0.5 * (pb - pa);
  const Eigen::Vector3d qa = mid - half;
  const Eigen::Vector3d qb = mid + half;
  return {qa.y(), qa.z(), qb.y(), qb.z()};
}

EventailModel normalize_scale(const EventailModel &model) {
  const double speed = working_velocity(model).norm();
  if (!(speed > 0.0) || !std::isfinite(speed)) {
    throw Error(ErrorKind::kUnobservable, "normalize_scale: zero observable velocity");
  }
  EventailModel out = model;
  out.line = scale_line(model.line, 1.0 / speed);
  return out;
}

EventailModel model_from_line_and_velocity(const PluckerLine &line_camera, const Eigen::Vector3d &velocity_camera,
                                           const Eigen::Matrix3d &working_to_camera) {
  const Eigen::Matrix3d rt = working_to_camera.transpose();
  const PluckerLine w{rt * line_camera.d, rt * line_camera.m};
  EventailModel model;
  model.line = two_point_from_plucker(w);
  model.precondition_rotation = working_to_camera;
  const LineFrame f = line_frame(model.line);
  const Eigen::Vector3d v = rt * velocity_camera;
  model.v_y = f.e2.dot(v) / f.e2.squaredNorm();
  model.v_z = f.e3.dot(v) / f.e3.squaredNorm();
  return normalize_scale(model);
}

EventailModel reexpress(const EventailModel &model, const Eigen::Matrix3d &working_to_camera) {
  EventailModel out = model_from_line_and_velocity(camera_line(model), camera_velocity(model), working_to_camera);
  return out;
}

ModelScorer::ModelScorer(const EventailModel &model) {
  const LineFrame f = line_frame(model.line);
  const Eigen::Vector3d v = f.e2 * model.v_y + f.e3 * model.v_z;
  // normal(t) = (Pa - vt) x (Pb - vt) = -e2 + t e1 x v
  a_ = model.precondition_rotation * (-f.e2);
  b_ = model.precondition_rotation * f.e1.cross(v);
}

double ModelScorer::error(const Eigen::Vector3d &bearing, double t_rel) const {
  const Eigen::Vector3d n = a_ + t_rel * b_;
  const double nn = n.norm();
  if (nn < kDegenerateFrameNorm) return M_PI_2;
  return std::asin(std::min(1.0, std::abs(bearing.dot(n)) / nn));
}

}  // namespace eventail

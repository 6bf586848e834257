#pragma once

#include <Eigen/Core>

#include "eventail/geometry.h"

namespace eventail {

/// A fitted eventail: a line in minimal form plus the two observable velocity
/// coordinates in its line frame. Both live in a working frame that is related
/// to the reference camera frame by `precondition_rotation` (working -> camera).
struct EventailModel {
  TwoPointLine line;
  double v_y = 0.0;
  double v_z = 0.0;
  double kappa = 0.0;  // component along e1; unobservable, always zero
  Eigen::Matrix3d precondition_rotation = Eigen::Matrix3d::Identity();
};

/// e2 * v_y + e3 * v_z in the working frame.
Eigen::Vector3d working_velocity(const EventailModel &model);
Eigen::Vector3d camera_velocity(const EventailModel &model);
PluckerLine camera_line(const EventailModel &model);
LineFrame camera_frame(const EventailModel &model);

/// |v|^2 - 1 for the full velocity R_l v_l.
double scale_constraint_residual(const EventailModel &model);

/// Minimal incidence residual for a bearing given in the reference camera frame.
double incidence_residual_minimal(const EventailModel &model, const Eigen::Vector3d &bearing, double t_rel);

/// Angle between the bearing and the plane spanned by the camera center at t_rel
/// and the line. Throws kDegenerate if the center lies on the line.
double angular_line_error(const EventailModel &model, const Eigen::Vector3d &bearing, double t_rel);

/// Mirror solution: P'a = -Pb, P'b = -Pa, same (v_y, v_z).
EventailModel dual_model(const EventailModel &model);

/// Two-point form of the line scaled by k about the camera center.
TwoPointLine scale_line(const TwoPointLine &line, double k);

/// Rescales the line (k > 0) so the full velocity has unit norm.
EventailModel normalize_scale(const EventailModel &model);

/// Builds the unit-scale model of a camera-frame line observed under camera-frame velocity,
/// expressed in the working frame given by `working_to_camera`.
EventailModel model_from_line_and_velocity(const PluckerLine &line_camera, const Eigen::Vector3d &velocity_camera,
                                           const Eigen::Matrix3d &working_to_camera);

/// Re-expresses the same geometric model in another working frame.
EventailModel reexpress(const EventailModel &model, const Eigen::Matrix3d &working_to_camera);

/// Precomputed residual plane n(t) = a + t b in camera coordinates, for fast scoring.
class ModelScorer {
 public:
  explicit ModelScorer(const EventailModel &model);

  /// Angular error in [0, pi/2]; pi/2 when the plane degenerates.
  double error(const Eigen::Vector3d &bearing, double t_rel) const;

 private:
  Eigen::Vector3d a_;
  Eigen::Vector3d b_;
};

}  // namespace eventail

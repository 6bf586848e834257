#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "eventail/geometry.h"
#include "eventail/model.h"

namespace eventail {

/// Observable velocity coordinates of one line, v = kappa e1 + lambda (v_y e2 + v_z e3).
struct PartialObservation {
  LineFrame frame;
  double v_y = 0.0;
  double v_z = 0.0;
};

/// Camera-frame observation carried by a fitted model.
PartialObservation partial_observation(const EventailModel &model);

struct StackedSystem {
  Eigen::MatrixXd A;  // 2N x 3
  Eigen::MatrixXd B;  // 2N x N
  Eigen::Matrix3d U;
  Eigen::VectorXd V;  // diagonal of the N x N block
  Eigen::MatrixXd W;  // 3 x N
};

/// Throws kInsufficientData for N < 2, kValidation for a zero observation and
/// kDegenerate for a degenerate line frame.
StackedSystem build_stacked_system(std::span<const PartialObservation> obs);

struct VelocityEstimate {
  Eigen::Vector3d v = Eigen::Vector3d::Zero();  // unit direction
  Eigen::VectorXd lambdas;
  double smallest_eigenvalue = 0.0;
  double second_eigenvalue = 0.0;
};

struct AveragingOptions {
  // Rejected as degenerate when all line directions lie within this angle of each other.
  double min_line_angle = 1e-6;  // rad
  // Also rejected when the second-smallest eigenvalue is below gap_ratio times
  // the smallest (1 disables the test), or numerically zero.
  double gap_ratio = 1.0;
};

/// Smallest eigenvector of the 3x3 Schur complement U - W V^-1 W^T, taken from
/// the SVD of its n x 3 square-root factor. The sign makes the
/// median lambda positive. Throws kDegenerate when the direction is not pinned down.
VelocityEstimate average_velocity(std::span<const PartialObservation> obs, const AveragingOptions &options = {});

/// Dense reference: smallest right singular vector of [A B].
VelocityEstimate average_velocity_oracle(std::span<const PartialObservation> obs,
                                         const AveragingOptions &options = {});

}  // namespace eventail

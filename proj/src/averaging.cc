#include "eventail/averaging.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "eventail/errors.h"

namespace eventail {

PartialObservation partial_observation(const EventailModel &model) {
  return {camera_frame(model), model.v_y, model.v_z};
}

StackedSystem build_stacked_system(std::span<const PartialObservation> obs) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  if (n < 2) throw Error(ErrorKind::kInsufficientData, "velocity averaging needs at least two lines");
  StackedSystem s;
  s.A.setZero(2 * n, 3);
  s.B.setZero(2 * n, n);
  s.U.setZero();
  s.V.setZero(n);
  s.W.setZero(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const PartialObservation &o = obs[static_cast<std::size_t>(i)];
    const double e2_sq = o.frame.e2.squaredNorm();
    const double e3_sq = o.frame.e3.squaredNorm();
    if (!(e2_sq > 0.0) || !(e3_sq > 0.0) || !std::isfinite(e2_sq + e3_sq)) {
      throw Error(ErrorKind::kDegenerate, "degenerate line frame in observation " + std::to_string(i));
    }
    if (o.v_y == 0.0 && o.v_z == 0.0) {
      throw Error(ErrorKind::kValidation, "observation " + std::to_string(i) + " has zero partial velocity");
    }
    s.A.row(2 * i) = o.frame.e2.transpose() / e2_sq;
    s.A.row(2 * i + 1) = o.frame.e3.transpose() / e3_sq;
    s.B(2 * i, i) = -o.v_y;
    s.B(2 * i + 1, i) = -o.v_z;
    s.U += o.frame.e2 * o.frame.e2.transpose() / (e2_sq * e2_sq) + o.frame.e3 * o.frame.e3.transpose() / (e3_sq * e3_sq);
    s.V(i) = o.v_y * o.v_y + o.v_z * o.v_z;
    s.W.col(i) = -(o.v_y / e2_sq) * o.frame.e2 - (o.v_z / e3_sq) * o.frame.e3;
  }
  return s;
}

namespace {

double median(Eigen::VectorXd x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void fix_sign(VelocityEstimate &est) {
  if (median(est.lambdas) < 0.0) {
    est.v = -est.v;
    est.lambdas = -est.lambdas;
  }
}

void check_directions(std::span<const PartialObservation> obs, const AveragingOptions &options) {
  const Eigen::Vector3d first = obs.front().frame.e1.normalized();
  for (const auto &o : obs) {
    const Eigen::Vector3d d = o.frame.e1.normalized();
    if (std::atan2(d.cross(first).norm(), std::abs(d.dot(first))) > options.min_line_angle) return;
  }
  throw Error(ErrorKind::kDegenerate, "all lines are parallel; the velocity component along them is unobservable");
}

void check_gap(double smallest, double second, double largest, const AveragingOptions &options) {
  if (second <= options.gap_ratio * std::max(smallest, 0.0) || second <= 1e-12 * largest) {
    throw Error(ErrorKind::kDegenerate, "velocity direction is not constrained (parallel lines?)");
  }
}

}  // namespace

VelocityEstimate average_velocity(std::span<const PartialObservation> obs, const AveragingOptions &options) {
  const StackedSystem s = build_stacked_system(obs);
  check_directions(obs, options);
  const Eigen::VectorXd v_inv = s.V.cwiseInverse();
  // U - W V^-1 W^T summed per line: each line's 2x2 block leaves the rank-1 term
  // q q^T with q = A_i^T n_i, n_i the unit normal of (v_y, v_z). Keeping the q as
  // rows of a factor avoids both the cancellation of the subtraction and the
  // squared conditioning of an eigen solve on the 3x3 product.
  Eigen::MatrixX3d factor(static_cast<Eigen::Index>(obs.size()), 3);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const PartialObservation &o = obs[i];
    const Eigen::Vector3d q = (o.v_z / o.frame.e2.squaredNorm()) * o.frame.e2 - (o.v_y / o.frame.e3.squaredNorm()) * o.frame.e3;
    factor.row(static_cast<Eigen::Index>(i)) = q.transpose() / std::hypot(o.v_y, o.v_z);
  }
  const Eigen::JacobiSVD<Eigen::MatrixX3d> svd(factor, Eigen::ComputeFullV);
  Eigen::Vector3d sigma = Eigen::Vector3d::Zero();
  sigma.head(svd.singularValues().size()) = svd.singularValues();
  const Eigen::Vector3d values = sigma.reverse().cwiseAbs2();
  check_gap(values(0), values(1), values(2), options);
  VelocityEstimate est;
  est.v = svd.matrixV().col(2).normalized();
  est.lambdas = -(v_inv.asDiagonal() * (s.W.transpose() * est.v));
  est.smallest_eigenvalue = values(0);
  est.second_eigenvalue = values(1);
  fix_sign(est);
  return est;
}

VelocityEstimate average_velocity_oracle(std::span<const PartialObservation> obs, const AveragingOptions &options) {
  const StackedSystem s = build_stacked_system(obs);
  check_directions(obs, options);
  const Eigen::Index n = s.B.cols();
  Eigen::MatrixXd ab(s.A.rows(), 3 + n);
  ab << s.A, s.B;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(ab, Eigen::ComputeFullV);
  Eigen::VectorXd sigma = Eigen::VectorXd::Zero(3 + n);
  sigma.head(svd.singularValues().size()) = svd.singularValues();
  const Eigen::VectorXd x = svd.matrixV().col(3 + n - 1);
  const double scale = x.head<3>().norm();
  if (!(scale > 0.0)) throw Error(ErrorKind::kDegenerate, "null vector has no velocity component");
  check_gap(sigma(n + 2) * sigma(n + 2), sigma(n + 1) * sigma(n + 1), sigma(0) * sigma(0), options);
  VelocityEstimate est;
  est.v = x.head<3>() / scale;
  est.lambdas = x.tail(n) / scale;
  est.smallest_eigenvalue = sigma(n + 2) * sigma(n + 2);
  est.second_eigenvalue = sigma(n + 1) * sigma(n + 1);
  fix_sign(est);
  return est;
}

}  // namespace eventail

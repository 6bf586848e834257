#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "eventail/errors.h"
#include "eventail/robust.h"

namespace eventail {
namespace {

struct PlaneFit {
  PlaneModel plane;
  std::vector<std::size_t> inliers;
};

std::vector<std::size_t> plane_inliers(const PlaneModel &plane, const std::vector<Eigen::Vector3d> &points,
                                       const std::vector<std::size_t> &working, double threshold) {
  std::vector<std::size_t> in;
  for (std::size_t i : working) {
    if (std::abs(plane.n.dot(points[i]) - plane.c) < threshold) in.push_back(i);
  }
  return in;
}

PlaneModel least_squares_plane(const std::vector<Eigen::Vector3d> &points, const std::vector<std::size_t> &idx) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t i : idx) mean += points[i];
  mean /= static_cast<double>(idx.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i : idx) scatter += (points[i] - mean) * (points[i] - mean).transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(scatter, Eigen::ComputeFullU);
  PlaneModel plane;
  plane.n = svd.matrixU().col(2).normalized();
  plane.c = plane.n.dot(mean);
  return plane;
}

}  // namespace

std::vector<PlaneCluster> plane_ransac_baseline(const EventSet &events, const PlaneBaselineConfig &cfg) {
  if (events.size() < 3) throw Error(ErrorKind::kInsufficientData, "plane baseline needs at least three events");
  if (!(cfg.threshold > 0.0) || cfg.max_models < 1 || cfg.max_iterations < 1 || !(cfg.delta_t > 0.0)) {
    throw Error(ErrorKind::kValidation, "invalid plane baseline configuration");
  }
  std::vector<Eigen::Vector3d> points;
  points.reserve(events.size());
  for (const auto &e : events.events) {
    points.emplace_back(e.f_prime.x() / e.f_prime.z(), e.f_prime.y() / e.f_prime.z(), e.t_prime / cfg.delta_t);
  }
  std::vector<std::size_t> working(events.size());
  std::iota(working.begin(), working.end(), 0);

  std::vector<PlaneCluster> clusters;
  for (int k = 0; k < cfg.max_models; ++k) {
    if (working.size() < 3 || static_cast<int>(working.size()) < cfg.min_inliers) break;
    Rng rng = make_rng(cfg.seed, 0x91a + static_cast<std::uint64_t>(k));
    std::uniform_int_distribution<std::size_t> pick(0, working.size() - 1);
    PlaneFit best;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      const std::size_t a = working[pick(rng)], b = working[pick(rng)], c = working[pick(rng)];
      if (a == b || b == c || a == c) continue;
      const Eigen::Vector3d n = (points[b] - points[a]).cross(points[c] - points[a]);
      if (n.norm() < 1e-12) continue;
      PlaneModel plane{n.normalized(), 0.0};
      plane.c = plane.n.dot(points[a]);
      auto in = plane_inliers(plane, points, working, cfg.threshold);
      if (in.size() > best.inliers.size()) best = {plane, std::move(in)};
    }
    if (best.inliers.size() >= 3) {
      PlaneModel refined = least_squares_plane(points, best.inliers);
      auto in = plane_inliers(refined, points, working, cfg.threshold);
      if (in.size() >= best.inliers.size()) best = {refined, std::move(in)};
    }
    if (best.inliers.empty() || static_cast<int>(best.inliers.size()) < cfg.min_inliers) break;
    PlaneCluster cluster;
    cluster.plane = best.plane;
    cluster.inlier_ratio = static_cast<double>(best.inliers.size()) / static_cast<double>(working.size());
    cluster.inlier_indices = std::move(best.inliers);
    std::vector<std::size_t> rest;
    std::set_difference(working.begin(), working.end(), cluster.inlier_indices.begin(), cluster.inlier_indices.end(),
                        std::back_inserter(rest));
    working = std::move(rest);
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

}  // namespace eventail

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "eventail/egg.h"
#include "eventail/events.h"
#include "eventail/model.h"
#include "eventail/rng.h"

namespace eventail {

struct RansacConfig {
  int max_iterations = 1000;
  double inlier_threshold = 2e-3;  // rad, angular_line_error
  SamplingStrategy sampling = SamplingStrategy::kSpatiotemporal;
  int min_inliers = 50;
  std::uint64_t seed = 0;
  double confidence = 0.999;
  bool adaptive = true;
  // When > 0, every other iteration draws its sample from the events within this
  // distance of a random seed event, measured in (x', y', t' / half-span) with
  // x', y' the normalized unrotated image coordinates.
  double neighborhood_radius = 0.0;
  // sequential_extract also drops events within this multiple of the threshold
  // of an extracted model from later rounds (they stay out of its inlier set)
  double suppression_factor = 1.0;
  // least-squares refits of each new best hypothesis on its inliers (0 disables)
  int refine_rounds = 10;
  int jobs = 1;

  void validate() const;
};

struct ClusterResult {
  EventailModel model;
  std::vector<std::size_t> inlier_indices;  // into the supplied event set, ascending
  double inlier_ratio = 0.0;
  double mean_error = 0.0;
};

/// Candidate events for one sample draw, pre-binned for the four strategies.
class SamplingPool {
 public:
  SamplingPool(const EventSet &events, std::vector<std::size_t> indices);

  std::size_t size() const { return indices_.size(); }

  /// Five distinct event indices; throws kInsufficientData below five candidates.
  std::array<std::size_t, 5> draw(SamplingStrategy strategy, Rng &rng) const;

 private:
  std::vector<std::size_t> indices_;
  std::array<std::array<std::vector<std::size_t>, 5>, 3> bins_;  // temporal, spatial, spatiotemporal
};

std::array<std::size_t, 5> sample_five(const EventSet &events, SamplingStrategy strategy, Rng &rng);

/// Best eventail by inlier count over all events (ties: lower mean inlier error).
/// Returns nullopt when no hypothesis reaches cfg.min_inliers.
std::optional<ClusterResult> ransac_eventail(const EventSet &events, const RansacConfig &cfg);

/// Same, restricted to the events listed in `candidates`.
std::optional<ClusterResult> ransac_eventail(const EventSet &events, std::span<const std::size_t> candidates,
                                             const RansacConfig &cfg);

/// Repeated RANSAC with inlier removal; clusters in discovery order, pairwise disjoint.
std::vector<ClusterResult> sequential_extract(const EventSet &events, const RansacConfig &cfg, int max_models = 5);

/// Plane n . (x', y', t' / delta_t) = c.
struct PlaneModel {
  Eigen::Vector3d n = Eigen::Vector3d::UnitZ();
  double c = 0.0;
};

struct PlaneCluster {
  PlaneModel plane;
  std::vector<std::size_t> inlier_indices;
  double inlier_ratio = 0.0;
};

struct PlaneBaselineConfig {
  double threshold = 2e-3;  // point-plane distance in normalized coordinates
  int max_models = 50;
  int min_inliers = 50;
  int max_iterations = 1000;
  double delta_t = 0.15;  // time normalization
  std::uint64_t seed = 0;
};

/// Sequential three-point plane RANSAC in normalized image-time coordinates.
std::vector<PlaneCluster> plane_ransac_baseline(const EventSet &events, const PlaneBaselineConfig &cfg);

}  // namespace eventail

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "eventail/averaging.h"
#include "eventail/egg.h"
#include "eventail/robust.h"

namespace eventail {

/// Angle between two directions; throws kValidation on a zero vector.
double direction_error(const Eigen::Vector3d &v_est, const Eigen::Vector3d &v_gt);

/// Angle between the observed velocity and v_gt projected onto span(e2, e3).
/// Throws kUnobservable when v_gt is parallel to the line.
double partial_direction_error(const PartialObservation &obs, const Eigen::Vector3d &v_gt);

struct DirectionErrorReport {
  double phi = 0.0;
  double phi_partial = 0.0;
  bool valid = false;
  bool success = false;
};

DirectionErrorReport make_report(bool valid, double phi, double threshold, double phi_partial = 0.0);

/// Percentage of reports that are valid and below threshold; throws kDomain on an empty list.
double success_rate(std::span<const DirectionErrorReport> reports, double threshold);

struct SweepRow {
  std::string kind;     // noise kind or motion violation
  double level = 0.0;   // in the unit named by the kind
  std::string variant;  // sampling strategy, or clean / noisy
  double q1 = 0.0, median = 0.0, q3 = 0.0, mean = 0.0;
  double max = 0.0;  // largest individual error behind the row
  int samples = 0;
  int failures = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
};

void write_csv(const std::filesystem::path &path, const SweepTable &table);

struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0, mean = 0.0;
};
Quartiles quartiles(std::vector<double> values);

struct NoiseSweepConfig {
  int configurations = 15;
  int evaluations = 100;
  std::vector<double> pixel_levels{0.0, 0.5, 1.0, 2.0};    // px
  std::vector<double> timestamp_levels{0.0, 1.0, 5.0, 10.0};  // ms
  std::vector<double> omega_levels{0.0, 1.0, 5.0, 10.0};      // deg/s
  std::vector<SamplingStrategy> strategies{SamplingStrategy::kRandom, SamplingStrategy::kTemporal,
                                           SamplingStrategy::kSpatial, SamplingStrategy::kSpatiotemporal};
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Box statistics over the per-configuration mean partial direction errors of
/// the minimal solver. Rows: kinds (pixel, timestamp, omega) x levels x strategies.
SweepTable run_noise_sweep(const NoiseSweepConfig &cfg);

struct MotionViolationConfig {
  std::vector<double> radii{2.0, 4.0, 6.0, 8.0, 10.0};        // m
  std::vector<double> accelerations{0.1, 0.2, 0.3, 0.4, 0.5};  // m/s^2
  int seeds = 20;
  double duration = 0.3;
  double speed = 1.0;
  int lines = 10;
  NoiseSpec noise{1.0, 1e-3, 0.0};
  double gyro_bias = 0.005;  // rad/s, noisy variant only
  RansacConfig ransac;
  std::size_t max_cluster_events = 3000;
  bool include_control = true;
  std::uint64_t seed = 0;
  int jobs = 1;
  MotionViolationConfig();
};

struct LabeledRun {
  bool valid = false;
  double phi = 0.0;
  int clusters = 0;
};

/// Full pipeline on a simulated 10-line scene with clusters taken from the labels.
LabeledRun run_labeled_scene(const MotionModel &motion, const MotionViolationConfig &cfg, bool noisy,
                             std::uint64_t seed);

/// Mean direction error per (violation, level, clean/noisy); the control row uses constant velocity.
SweepTable run_motion_violation(const MotionViolationConfig &cfg);

struct HighDynamicsConfig {
  std::uint64_t seed = 0;
  NoiseSpec noise{1.0, 1e-3, 0.0};
  double gyro_bias = 0.0;
  int downsample = 10;
  RansacConfig ransac;
  int max_models = 5;
  PlaneBaselineConfig plane;
  HighDynamicsConfig();
};

struct HighDynamicsReport {
  std::size_t n_events = 0;
  int clusters = 0;
  std::vector<double> cluster_ratios;  // inliers / remaining events at extraction
  std::vector<double> line_ratios;     // best cluster's share of each line's events
  bool velocity_valid = false;
  double phi = 0.0;
  Eigen::Vector3d v_est = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_gt = Eigen::Vector3d::Zero();
  int plane_clusters = 0;
};

HighDynamicsReport run_high_dynamics(const HighDynamicsConfig &cfg);

nlohmann::json to_json(const HighDynamicsReport &report);

}  // namespace eventail

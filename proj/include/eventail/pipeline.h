#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "eventail/averaging.h"
#include "eventail/event_io.h"
#include "eventail/events.h"
#include "eventail/geometry.h"
#include "eventail/robust.h"

namespace eventail {

struct FitOptions {
  double window_sec = 0.3;
  int downsample = 1;
  int max_clusters = 5;
  // windows hold many lines, so half of the samples are drawn locally
  RansacConfig ransac{.neighborhood_radius = 0.2};
  AveragingOptions averaging;
  CameraModel camera;
  int jobs = 1;  // windows processed concurrently

  void validate() const;
};

struct WindowResult {
  int index = 0;
  TimeWindow window;
  std::size_t n_events = 0;
  std::string status;  // ok, insufficient-events, averaging-skipped, degenerate
  std::string message;
  std::vector<ClusterResult> clusters;
  std::optional<VelocityEstimate> velocity;  // camera frame at window.t_s
};

WindowResult fit_window(std::span<const Event> events, std::span<const ImuSample> gyro, const TimeWindow &window,
                        const FitOptions &options, std::uint64_t seed);

/// Downsamples, splits into consecutive windows and fits each; results in window order.
std::vector<WindowResult> fit_stream(std::span<const Event> events, std::span<const ImuSample> gyro,
                                     const FitOptions &options, std::uint64_t seed);

/// Streaming form: `sink` receives each result in window order as soon as its batch of `jobs` windows is done.
void fit_stream(std::span<const Event> events, std::span<const ImuSample> gyro, const FitOptions &options,
                std::uint64_t seed, const std::function<void(const WindowResult &)> &sink);

nlohmann::json to_json(const WindowResult &result);

struct EvalRow {
  int window = 0;
  double t_s = 0.0;
  bool valid = false;
  double phi = 0.0;
  bool success = false;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double threshold = 0.7;
  double phi_mean = 0.0;    // over valid windows
  double phi_median = 0.0;
  double success_rate = 0.0;  // percent of all windows
  int n_valid = 0;
};

/// Compares fitted directions against the trajectory's camera-frame velocity.
/// Throws kDomain when no window lies inside the trajectory's time span.
EvalReport evaluate(const std::vector<nlohmann::json> &records, const std::vector<TrajectorySample> &trajectory,
                    double threshold);

nlohmann::json to_json(const EvalReport &report);

}  // namespace eventail

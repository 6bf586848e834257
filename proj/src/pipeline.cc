#include "eventail/pipeline.h"

#include <algorithm>
#include <cmath>

#include "eventail/errors.h"
#include "eventail/harness.h"
#include "eventail/parallel.h"

namespace eventail {

void FitOptions::validate() const {
  if (!(window_sec > 0.0)) throw Error(ErrorKind::kValidation, "window_sec must be > 0");
  if (downsample < 1) throw Error(ErrorKind::kValidation, "downsample must be >= 1");
  if (max_clusters < 1) throw Error(ErrorKind::kValidation, "max_clusters must be >= 1");
  ransac.validate();
  camera.validate();
}

WindowResult fit_window(std::span<const Event> events, std::span<const ImuSample> gyro, const TimeWindow &window,
                        const FitOptions &options, std::uint64_t seed) {
  WindowResult result;
  result.window = window;
  result.n_events = events.size();
  if (events.size() < 5) {
    result.status = "insufficient-events";
    result.message = "fewer than five events in the window";
    return result;
  }
  const EventSet set = unrotate_events(events, gyro, window, options.camera);
  RansacConfig rc = options.ransac;
  rc.seed = seed;
  result.clusters = sequential_extract(set, rc, options.max_clusters);
  if (result.clusters.size() < 2) {
    result.status = "averaging-skipped";
    result.message = "fewer than two clusters";
    return result;
  }
  std::vector<PartialObservation> obs;
  for (const auto &c : result.clusters) obs.push_back(partial_observation(c.model));
  try {
    result.velocity = average_velocity(obs, options.averaging);
    result.status = "ok";
  } catch (const Error &e) {
    result.status = "degenerate";
    result.message = e.what();
  }
  return result;
}

void fit_stream(std::span<const Event> events, std::span<const ImuSample> gyro, const FitOptions &options,
                std::uint64_t seed, const std::function<void(const WindowResult &)> &sink) {
  options.validate();
  const std::vector<Event> thinned = downsample(events, options.downsample);
  const std::vector<TimeWindow> windows = split_windows(thinned, options.window_sec);
  FitOptions inner = options;
  inner.ransac.jobs = 1;
  const auto batch = static_cast<std::size_t>(resolve_jobs(options.jobs));
  for (std::size_t start = 0; start < windows.size(); start += batch) {
    const std::size_t count = std::min(batch, windows.size() - start);
    std::vector<WindowResult> results(count);
    parallel_for(count, options.jobs, [&](std::size_t j) {
      const std::size_t k = start + j;
      const bool last = k + 1 == windows.size();
      const std::vector<Event> in = events_in(thinned, windows[k], last);
      results[j] = fit_window(in, gyro, windows[k], inner, stream_seed(seed, k));
      results[j].index = static_cast<int>(k);
    });
    for (const auto &r : results) sink(r);
  }
}

std::vector<WindowResult> fit_stream(std::span<const Event> events, std::span<const ImuSample> gyro,
                                     const FitOptions &options, std::uint64_t seed) {
  std::vector<WindowResult> out;
  fit_stream(events, gyro, options, seed, [&](const WindowResult &r) { out.push_back(r); });
  return out;
}

namespace {

nlohmann::json vec(const Eigen::Vector3d &v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

nlohmann::json to_json(const WindowResult &r) {
  nlohmann::json j;
  j["window"] = r.index;
  j["t_s"] = r.window.t_s;
  j["delta_t"] = r.window.delta_t;
  j["n_events"] = r.n_events;
  j["status"] = r.status;
  if (!r.message.empty()) j["message"] = r.message;
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto &c : r.clusters) {
    nlohmann::json cj;
    const auto &m = c.model;
    cj["line"] = {m.line.y_a, m.line.z_a, m.line.y_b, m.line.z_b};
    cj["v_y"] = m.v_y;
    cj["v_z"] = m.v_z;
    const Eigen::Matrix3d &rot = m.precondition_rotation;
    cj["precondition_rotation"] = {rot(0, 0), rot(0, 1), rot(0, 2), rot(1, 0), rot(1, 1),
                                   rot(1, 2), rot(2, 0), rot(2, 1), rot(2, 2)};
    cj["observed_velocity"] = vec(camera_velocity(m));
    cj["inliers"] = c.inlier_indices.size();
    cj["first_inlier"] = c.inlier_indices.empty() ? 0 : c.inlier_indices.front();
    cj["last_inlier"] = c.inlier_indices.empty() ? 0 : c.inlier_indices.back();
    cj["inlier_ratio"] = c.inlier_ratio;
    cj["mean_error"] = c.mean_error;
    clusters.push_back(cj);
  }
  j["clusters"] = clusters;
  if (r.velocity) {
    j["velocity"] = vec(r.velocity->v);
    j["lambdas"] = std::vector<double>(r.velocity->lambdas.data(), r.velocity->lambdas.data() + r.velocity->lambdas.size());
    j["smallest_eigenvalue"] = r.velocity->smallest_eigenvalue;
    j["second_eigenvalue"] = r.velocity->second_eigenvalue;
  } else {
    j["velocity"] = nullptr;
  }
  return j;
}

EvalReport evaluate(const std::vector<nlohmann::json> &records, const std::vector<TrajectorySample> &trajectory,
                    double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorKind::kValidation, "threshold must be > 0");
  if (trajectory.empty()) throw Error(ErrorKind::kDomain, "empty trajectory");
  EvalReport report;
  report.threshold = threshold;
  int matched = 0;
  std::vector<double> phis;
  for (const auto &rec : records) {
    EvalRow row;
    try {
      row.window = rec.at("window").get<int>();
      row.t_s = rec.at("t_s").get<double>();
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorKind::kParse, std::string("malformed result record: ") + e.what());
    }
    if (row.t_s < trajectory.front().t || row.t_s > trajectory.back().t) {
      report.rows.push_back(row);
      continue;
    }
    ++matched;
    const auto &v = rec.contains("velocity") ? rec["velocity"] : nlohmann::json();
    if (v.is_array() && v.size() == 3) {
      const Eigen::Vector3d est(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
      const Eigen::Vector3d gt = camera_frame_velocity(trajectory, row.t_s);
      if (est.norm() > 0.0 && gt.norm() > 0.0) {
        row.valid = true;
        row.phi = direction_error(est, gt);
        row.success = row.phi < threshold;
        phis.push_back(row.phi);
      }
    }
    report.rows.push_back(row);
  }
  if (matched == 0) throw Error(ErrorKind::kDomain, "no result window overlaps the trajectory");
  report.n_valid = static_cast<int>(phis.size());
  if (!phis.empty()) {
    const Quartiles q = quartiles(phis);
    report.phi_mean = q.mean;
    report.phi_median = q.median;
  }
  std::vector<DirectionErrorReport> reports;
  for (const auto &row : report.rows) reports.push_back(make_report(row.valid, row.phi, threshold));
  report.success_rate = success_rate(reports, threshold);
  return report;
}

nlohmann::json to_json(const EvalReport &r) {
  nlohmann::json j;
  j["threshold_rad"] = r.threshold;
  j["windows"] = r.rows.size();
  j["valid_windows"] = r.n_valid;
  j["phi_mean"] = r.phi_mean;
  j["phi_median"] = r.phi_median;
  j["success_rate_percent"] = r.success_rate;
  return j;
}

}  // namespace eventail

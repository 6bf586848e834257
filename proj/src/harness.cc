#include "eventail/harness.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "eventail/errors.h"
#include "eventail/parallel.h"
#include "eventail/solver.h"

namespace eventail {

double direction_error(const Eigen::Vector3d &v_est, const Eigen::Vector3d &v_gt) {
  const double a = v_est.norm();
  const double b = v_gt.norm();
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorKind::kValidation, "direction_error: zero vector");
  // atan2 keeps full precision near 0 and pi, where acos of the dot product does not
  return std::atan2(v_est.cross(v_gt).norm(), v_est.dot(v_gt));
}

double partial_direction_error(const PartialObservation &obs, const Eigen::Vector3d &v_gt) {
  const Eigen::Vector3d e1 = obs.frame.e1.normalized();
  const Eigen::Vector3d projected = v_gt - e1.dot(v_gt) * e1;
  if (projected.norm() <= 1e-12 * v_gt.norm()) {
    throw Error(ErrorKind::kUnobservable, "velocity is parallel to the line");
  }
  const Eigen::Vector3d observed = obs.frame.e2 * obs.v_y + obs.frame.e3 * obs.v_z;
  return direction_error(observed, projected);
}

DirectionErrorReport make_report(bool valid, double phi, double threshold, double phi_partial) {
  DirectionErrorReport r;
  r.valid = valid;
  r.phi = phi;
  r.phi_partial = phi_partial;
  r.success = valid && phi < threshold;
  return r;
}

double success_rate(std::span<const DirectionErrorReport> reports, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorKind::kValidation, "success_rate: threshold must be > 0");
  if (reports.empty()) throw Error(ErrorKind::kDomain, "success_rate: no reports");
  const auto ok = std::count_if(reports.begin(), reports.end(),
                                [&](const DirectionErrorReport &r) { return r.valid && r.phi < threshold; });
  return 100.0 * static_cast<double>(ok) / static_cast<double>(reports.size());
}

Quartiles quartiles(std::vector<double> values) {
  Quartiles q;
  if (values.empty()) {
    q.q1 = q.median = q.q3 = q.mean = std::nan("");
    return q;
  }
  std::sort(values.begin(), values.end());
  // linear interpolation between order statistics
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return q;
}

void write_csv(const std::filesystem::path &path, const SweepTable &table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "kind,level,variant,q1,median,q3,mean,max,samples,failures\n";
  char buf[512];
  for (const auto &r : table.rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", r.kind.c_str(), r.level,
                  r.variant.c_str(), r.q1, r.median, r.q3, r.mean, r.max, r.samples, r.failures);
    out << buf;
  }
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------

SweepTable run_noise_sweep(const NoiseSweepConfig &cfg) {
  if (cfg.configurations < 1 || cfg.evaluations < 1) {
    throw Error(ErrorKind::kValidation, "noise sweep needs at least one configuration and evaluation");
  }
  struct Kind {
    const char *name;
    const std::vector<double> *levels;
  };
  const std::array<Kind, 3> kinds{{{"pixel", &cfg.pixel_levels},
                                   {"timestamp", &cfg.timestamp_levels},
                                   {"omega", &cfg.omega_levels}}};
  std::vector<SingleLineInstance> instances(static_cast<std::size_t>(cfg.configurations));
  parallel_for(instances.size(), cfg.jobs, [&](std::size_t c) {
    instances[c] = single_line_instance(stream_seed(cfg.seed, c));
  });

  SweepTable table;
  for (const Kind &kind : kinds) {
    for (double level : *kind.levels) {
      NoiseSpec noise;
      if (kind.name == std::string("pixel")) noise.pixel_magnitude = level;
      if (kind.name == std::string("timestamp")) noise.timestamp_std = level * 1e-3;
      if (kind.name == std::string("omega")) noise.omega_magnitude = level * M_PI / 180.0;
      noise.validate();
      for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
        const SamplingStrategy strategy = cfg.strategies[s];
        std::vector<double> means(instances.size(), std::nan(""));
        std::vector<double> worst(instances.size(), 0.0);
        parallel_for(instances.size(), cfg.jobs, [&](std::size_t c) {
          const SingleLineInstance &inst = instances[c];
          double sum = 0.0;
          int ok = 0;
          for (int e = 0; e < cfg.evaluations; ++e) {
            // same samples at every noise level, so trends are not masked by resampling
            Rng rng = make_rng(stream_seed(cfg.seed, 0x5a00 + c), static_cast<std::uint64_t>(e) * 8 + s);
            const auto samples = inst.sample(strategy, 5, rng);
            const EventSet set = inst.to_bearings(samples, noise, rng);
            try {
              const MinimalSolution sol = solve_minimal(set.events);
              if (sol.models.empty()) continue;
              const double err = partial_direction_error(partial_observation(sol.models.front()), inst.twist.v);
              sum += err;
              worst[c] = std::max(worst[c], err);
              ++ok;
            } catch (const Error &) {
            }
          }
          if (ok > 0) means[c] = sum / ok;
        });
        SweepRow row;
        row.kind = kind.name;
        row.level = level;
        row.variant = to_string(strategy);
        std::vector<double> finite;
        for (double m : means) {
          if (std::isfinite(m)) {
            finite.push_back(m);
          } else {
            ++row.failures;
          }
        }
        const Quartiles q = quartiles(finite);
        row.max = *std::max_element(worst.begin(), worst.end());
        row.q1 = q.q1;
        row.median = q.median;
        row.q3 = q.q3;
        row.mean = q.mean;
        row.samples = static_cast<int>(finite.size());
        table.rows.push_back(row);
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::Vector3d perpendicular_unit(const Eigen::Vector3d &u, Rng &rng) {
  for (;;) {
    const Eigen::Vector3d r = random_unit_vector(rng);
    const Eigen::Vector3d p = r - r.dot(u) * u;
    if (p.norm() > 0.1) return p.normalized();
  }
}

}  // namespace

LabeledRun run_labeled_scene(const MotionModel &motion, const MotionViolationConfig &cfg, bool noisy,
                             std::uint64_t seed) {
  LabeledRun run;
  SceneSpec spec;
  spec.count = cfg.lines;
  const Wireframe scene = generate_scene(spec, seed);
  const CameraModel cam;
  SimulatedEvents sim = simulate_events(scene, motion, cam, 0.0, cfg.duration);

  ImuModel imu;
  if (noisy && cfg.gyro_bias > 0.0) {
    Rng rng = make_rng(seed, 0xb1a5);
    imu.gyro_bias0 = cfg.gyro_bias * random_unit_vector(rng);
  }
  const auto gyro = simulate_imu(motion, imu, 0.0, cfg.duration + 1.0 / imu.rate, seed);

  std::vector<Event> events = std::move(sim.events);
  std::vector<int> labels = std::move(sim.labels);
  if (noisy) {
    std::vector<std::size_t> order;
    events = corrupt(events, cfg.noise, stream_seed(seed, 0xc0), &order);
    std::vector<int> permuted(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) permuted[i] = labels[order[i]];
    labels = std::move(permuted);
  }

  const TimeWindow window{0.5 * cfg.duration, 0.5 * cfg.duration};
  const EventSet set = unrotate_events(events, gyro, window, cam);

  std::vector<PartialObservation> obs;
  for (int l = 0; l < cfg.lines; ++l) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == l) idx.push_back(i);
    }
    if (idx.size() < 5 || static_cast<int>(idx.size()) < cfg.ransac.min_inliers) continue;
    if (idx.size() > cfg.max_cluster_events) {
      std::vector<std::size_t> thin;
      const double stride = static_cast<double>(idx.size()) / static_cast<double>(cfg.max_cluster_events);
      for (std::size_t k = 0; k < cfg.max_cluster_events; ++k) {
        thin.push_back(idx[static_cast<std::size_t>(static_cast<double>(k) * stride)]);
      }
      idx = std::move(thin);
    }
    RansacConfig rc = cfg.ransac;
    rc.seed = stream_seed(seed, 0x700 + static_cast<std::uint64_t>(l));
    rc.min_inliers = std::min<int>(rc.min_inliers, static_cast<int>(idx.size()));
    const auto found = ransac_eventail(set, idx, rc);
    if (found) obs.push_back(partial_observation(found->model));
  }
  run.clusters = static_cast<int>(obs.size());
  if (obs.size() < 2) return run;
  try {
    const VelocityEstimate est = average_velocity(obs);
    run.phi = direction_error(est.v, body_velocity_at(motion, window.t_s));
    run.valid = true;
  } catch (const Error &) {
  }
  return run;
}

SweepTable run_motion_violation(const MotionViolationConfig &cfg) {
  if (cfg.seeds < 1) throw Error(ErrorKind::kValidation, "motion violation needs at least one seed");
  struct Case {
    std::string kind;
    double level;
  };
  std::vector<Case> cases;
  if (cfg.include_control) cases.push_back({"control", 0.0});
  for (double r : cfg.radii) cases.push_back({"circular-arc", r});
  for (double a : cfg.accelerations) cases.push_back({"acceleration", a});

  SweepTable table;
  for (const Case &c : cases) {
    for (bool noisy : {false, true}) {
      std::vector<LabeledRun> runs(static_cast<std::size_t>(cfg.seeds));
      parallel_for(runs.size(), cfg.jobs, [&](std::size_t k) {
        const std::uint64_t seed = stream_seed(cfg.seed, k);
        // motion directions depend only on the seed, so levels share geometry
        Rng rng = make_rng(seed, 0x30);
        const Eigen::Vector3d u = random_unit_vector(rng);
        const Eigen::Vector3d w = perpendicular_unit(u, rng);
        MotionModel motion;
        if (c.kind == "circular-arc") {
          CircularArc arc;
          arc.radius = c.level;
          arc.tangential_speed = cfg.speed;
          arc.tangent = u;
          arc.normal = w;
          motion = arc;
        } else if (c.kind == "acceleration") {
          ConstantAccel acc;
          acc.v0 = cfg.speed * u;
          acc.a = c.level * w;
          motion = acc;
        } else {
          ConstantTwist twist;
          twist.v = cfg.speed * u;
          motion = twist;
        }
        runs[k] = run_labeled_scene(motion, cfg, noisy, seed);
      });
      SweepRow row;
      row.kind = c.kind;
      row.level = c.level;
      row.variant = noisy ? "noisy" : "clean";
      std::vector<double> phis;
      for (const auto &r : runs) {
        if (r.valid) {
          phis.push_back(r.phi);
        } else {
          ++row.failures;
        }
      }
      const Quartiles q = quartiles(phis);
      row.max = phis.empty() ? 0.0 : *std::max_element(phis.begin(), phis.end());
      row.q1 = q.q1;
      row.median = q.median;
      row.q3 = q.q3;
      row.mean = q.mean;
      row.samples = static_cast<int>(phis.size());
      table.rows.push_back(row);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

MotionViolationConfig::MotionViolationConfig() { ransac.inlier_threshold = 6e-3; }

HighDynamicsConfig::HighDynamicsConfig() {
  // about 2 px at the default focal length; the scene is noisy and fast
  ransac.inlier_threshold = 6e-3;
  ransac.max_iterations = 2000;
  ransac.suppression_factor = 3.0;
  plane.delta_t = 0.5;
  plane.threshold = 6e-3;
}

HighDynamicsReport run_high_dynamics(const HighDynamicsConfig &cfg) {
  Wireframe scene;
  scene.segments.push_back({{0.0, 0.75, 3.0}, {0.0, 2.0, 3.0}});
  scene.segments.push_back({{0.38, -0.65, 3.0}, {0.75, -1.3, 3.0}});
  ConstantTwist twist;
  twist.v = {0.4, 0.4, 2.0};
  twist.omega = {0.0, 0.0, -2.0 * M_PI};
  const MotionModel motion = twist;
  const CameraModel cam;
  const double duration = 1.0;

  SimulatedEvents sim = simulate_events(scene, motion, cam, 0.0, duration);
  std::vector<std::size_t> order;
  std::vector<Event> events = corrupt(sim.events, cfg.noise, stream_seed(cfg.seed, 0xc0), &order);
  std::vector<int> labels(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) labels[i] = sim.labels[order[i]];

  std::vector<Event> kept;
  std::vector<int> kept_labels;
  for (std::size_t i = 0; i < events.size(); i += static_cast<std::size_t>(std::max(1, cfg.downsample))) {
    kept.push_back(events[i]);
    kept_labels.push_back(labels[i]);
  }

  ImuModel imu;
  if (cfg.gyro_bias > 0.0) {
    Rng rng = make_rng(cfg.seed, 0xb1a5);
    imu.gyro_bias0 = cfg.gyro_bias * random_unit_vector(rng);
  }
  const auto gyro = simulate_imu(motion, imu, 0.0, duration + 1.0 / imu.rate, cfg.seed);
  const TimeWindow window{0.5 * duration, 0.5 * duration};
  EventSet set = unrotate_events(kept, gyro, window, cam);
  set.labels = kept_labels;

  HighDynamicsReport report;
  report.n_events = set.size();
  RansacConfig rc = cfg.ransac;
  rc.seed = stream_seed(cfg.seed, 0x5e9);
  const auto clusters = sequential_extract(set, rc, cfg.max_models);
  report.clusters = static_cast<int>(clusters.size());
  for (const auto &c : clusters) report.cluster_ratios.push_back(c.inlier_ratio);
  for (int l = 0; l < static_cast<int>(scene.segments.size()); ++l) {
    const auto total = std::count(kept_labels.begin(), kept_labels.end(), l);
    double best = 0.0;
    for (const auto &c : clusters) {
      const auto hits = std::count_if(c.inlier_indices.begin(), c.inlier_indices.end(),
                                      [&](std::size_t i) { return kept_labels[i] == l; });
      if (total > 0) best = std::max(best, static_cast<double>(hits) / static_cast<double>(total));
    }
    report.line_ratios.push_back(best);
  }

  report.v_gt = body_velocity_at(motion, window.t_s).normalized();
  if (clusters.size() >= 2) {
    std::vector<PartialObservation> obs;
    for (const auto &c : clusters) obs.push_back(partial_observation(c.model));
    try {
      const VelocityEstimate est = average_velocity(obs);
      report.v_est = est.v;
      report.phi = direction_error(est.v, report.v_gt);
      report.velocity_valid = true;
    } catch (const Error &) {
    }
  }

  PlaneBaselineConfig pc = cfg.plane;
  pc.seed = stream_seed(cfg.seed, 0x91a);
  report.plane_clusters = static_cast<int>(plane_ransac_baseline(set, pc).size());
  return report;
}

nlohmann::json to_json(const HighDynamicsReport &r) {
  nlohmann::json j;
  j["n_events"] = r.n_events;
  j["eventail_clusters"] = r.clusters;
  j["cluster_inlier_ratios"] = r.cluster_ratios;
  j["line_inlier_ratios"] = r.line_ratios;
  j["velocity_valid"] = r.velocity_valid;
  j["phi_rad"] = r.phi;
  j["v_est"] = {r.v_est.x(), r.v_est.y(), r.v_est.z()};
  j["v_gt"] = {r.v_gt.x(), r.v_gt.y(), r.v_gt.z()};
  j["plane_clusters"] = r.plane_clusters;
  return j;
}

}  // namespace eventail

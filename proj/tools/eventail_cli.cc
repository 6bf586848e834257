// eventail: simulate scenes, fit eventails per window, evaluate against ground
// truth and run the simulation experiment suites.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "eventail/config.h"
#include "eventail/egg.h"
#include "eventail/errors.h"
#include "eventail/event_io.h"
#include "eventail/harness.h"
#include "eventail/pipeline.h"

namespace fs = std::filesystem;
using namespace eventail;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out_dir = ".";
};

RunConfig resolve(const Common &common) {
  RunConfig cfg = common.config_path.empty() ? parse_config({{"schema_version", kSchemaVersion}})
                                             : load_config(common.config_path);
  if (common.seed) cfg.seed = *common.seed;
  if (common.jobs) {
    cfg.fit.jobs = *common.jobs;
    cfg.noise_sweep.jobs = *common.jobs;
    cfg.motion_violation.jobs = *common.jobs;
  }
  return cfg;
}

fs::path prepare_out_dir(const std::string &dir) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create output directory " + dir + ": " + ec.message());
  return out;
}

void write_json(const fs::path &path, const nlohmann::json &j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

int cmd_simulate(const Common &common) {
  const RunConfig cfg = resolve(common);
  const fs::path out = prepare_out_dir(common.out_dir);
  const SimulationConfig &sim = cfg.simulation;
  const Wireframe scene = sim.segments ? *sim.segments : generate_scene(sim.scene, cfg.seed);
  SimulatedEvents events = simulate_events(scene, sim.motion, cfg.camera, sim.t0, sim.t1, sim.resolution);
  std::vector<std::size_t> order;
  std::vector<Event> noisy = corrupt(events.events, sim.noise, stream_seed(cfg.seed, 1), &order);
  std::vector<int> labels(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) labels[i] = events.labels[order[i]];
  const auto imu = simulate_imu(sim.motion, sim.imu, sim.t0, sim.t1, stream_seed(cfg.seed, 2));
  const auto gyro = corrupt_gyro(imu, sim.noise.omega_magnitude, stream_seed(cfg.seed, 3));
  write_events(out / "events.csv", noisy);
  write_labels(out / "labels.csv", labels);
  write_imu(out / "imu.csv", gyro);
  write_trajectory(out / "trajectory.csv", sample_trajectory(sim.motion, sim.t0, sim.t1, sim.trajectory_rate));
  std::cerr << "simulate: " << noisy.size() << " events from " << scene.segments.size() << " segments\n";
  return 0;
}

struct FitArgs {
  std::string events_path, imu_path;
  std::optional<double> window_sec, threshold;
  std::optional<int> downsample, max_clusters;
};

int cmd_fit(const Common &common, const FitArgs &args) {
  RunConfig cfg = resolve(common);
  if (args.window_sec) cfg.fit.window_sec = *args.window_sec;
  if (args.threshold) cfg.fit.ransac.inlier_threshold = *args.threshold;
  if (args.downsample) cfg.fit.downsample = *args.downsample;
  if (args.max_clusters) cfg.fit.max_clusters = *args.max_clusters;
  try {
    cfg.fit.validate();
  } catch (const Error &e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  const auto events = read_events(args.events_path);
  const auto imu = read_imu(args.imu_path);
  const fs::path out = prepare_out_dir(common.out_dir);
  std::ofstream records(out / "fit.jsonl");
  if (!records) throw Error(ErrorKind::kIo, "cannot write " + (out / "fit.jsonl").string());
  int windows = 0, fused = 0;
  fit_stream(events, imu, cfg.fit, cfg.seed, [&](const WindowResult &r) {
    records << to_json(r).dump() << '\n';
    records.flush();
    ++windows;
    fused += r.velocity.has_value();
  });
  if (!records) throw Error(ErrorKind::kIo, "failed writing fit.jsonl");
  std::cerr << "fit: " << windows << " windows, " << fused << " with a fused velocity\n";
  return 0;
}

int cmd_eval(const Common &common, const std::string &results_path, const std::string &trajectory_path,
             std::optional<double> threshold) {
  RunConfig cfg = resolve(common);
  if (threshold) cfg.eval_threshold = *threshold;
  if (!(cfg.eval_threshold > 0.0)) throw Error(ErrorKind::kConfig, "--threshold-rad must be > 0");
  std::ifstream in(results_path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + results_path);
  std::vector<nlohmann::json> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error &e) {
      throw Error(ErrorKind::kParse, results_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  const auto trajectory = read_trajectory(trajectory_path);
  const EvalReport report = evaluate(records, trajectory, cfg.eval_threshold);
  const fs::path out = prepare_out_dir(common.out_dir);
  std::ofstream csv(out / "eval.csv");
  if (!csv) throw Error(ErrorKind::kIo, "cannot write eval.csv");
  csv << "window,t_s,valid,phi_rad,success\n";
  char buf[256];
  for (const auto &row : report.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%.17g,%d\n", row.window, row.t_s, row.valid ? 1 : 0,
                  row.valid ? row.phi : std::nan(""), row.success ? 1 : 0);
    csv << buf;
  }
  if (!csv) throw Error(ErrorKind::kIo, "failed writing eval.csv");
  write_json(out / "eval.json", to_json(report));
  std::cerr << "eval: phi mean " << report.phi_mean << " rad, median " << report.phi_median << " rad, success "
            << report.success_rate << "%\n";
  return 0;
}

nlohmann::json table_json(const SweepTable &table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto &r : table.rows) {
    rows.push_back({{"kind", r.kind}, {"level", r.level}, {"variant", r.variant}, {"q1", r.q1},
                    {"median", r.median}, {"q3", r.q3}, {"mean", r.mean}, {"max", r.max},
                    {"samples", r.samples}, {"failures", r.failures}});
  }
  return rows;
}

int cmd_experiment(const Common &common, const std::string &suite) {
  RunConfig cfg = resolve(common);
  const fs::path out = prepare_out_dir(common.out_dir);
  nlohmann::json summary{{"suite", suite}, {"seed", cfg.seed}};
  if (suite == "noise-sweep") {
    cfg.noise_sweep.seed = cfg.seed;
    const SweepTable table = run_noise_sweep(cfg.noise_sweep);
    write_csv(out / "noise_sweep.csv", table);
    double zero_max = 0.0;
    for (const auto &r : table.rows) {
      if (r.level == 0.0) zero_max = std::max(zero_max, r.max);
    }
    summary["zero_noise_max_error_rad"] = zero_max;
    summary["rows"] = table_json(table);
  } else if (suite == "motion-violation") {
    cfg.motion_violation.seed = cfg.seed;
    const SweepTable table = run_motion_violation(cfg.motion_violation);
    write_csv(out / "motion_violation.csv", table);
    summary["rows"] = table_json(table);
  } else if (suite == "high-dynamics") {
    cfg.high_dynamics.seed = cfg.seed;
    const HighDynamicsReport report = run_high_dynamics(cfg.high_dynamics);
    summary["report"] = to_json(report);
    summary["two_clusters_found"] = report.clusters == 2;
    std::cerr << "high-dynamics: " << report.clusters << " eventail clusters, " << report.plane_clusters
              << " plane clusters, phi " << report.phi << " rad\n";
  } else {
    throw Error(ErrorKind::kConfig, "unknown suite '" + suite + "'");
  }
  write_json(out / (suite + ".json"), summary);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Eventail line fitting and linear velocity estimation for event cameras"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", common.config_path, "JSON config file (schema_version 1)")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Global seed (overrides the config)");
    sub->add_option("--jobs", common.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out-dir", common.out_dir, "Output directory");
  };

  CLI::App *simulate = app.add_subcommand("simulate", "Simulate events, labels, IMU and trajectory");
  add_common(simulate);

  FitArgs fit_args;
  CLI::App *fit = app.add_subcommand("fit", "Fit eventails and fuse the velocity per window");
  add_common(fit);
  fit->add_option("--events", fit_args.events_path, "Events CSV")->required();
  fit->add_option("--imu", fit_args.imu_path, "IMU CSV")->required();
  fit->add_option("--window-sec", fit_args.window_sec, "Window length in seconds (default 0.3)");
  fit->add_option("--downsample", fit_args.downsample, "Keep every k-th event (default 1)");
  fit->add_option("--threshold-rad", fit_args.threshold, "RANSAC inlier threshold in radians");
  fit->add_option("--max-clusters", fit_args.max_clusters, "Clusters extracted per window (default 5)");

  std::string results_path, trajectory_path;
  std::optional<double> eval_threshold;
  CLI::App *eval = app.add_subcommand("eval", "Direction error and success rate against a trajectory");
  add_common(eval);
  eval->add_option("--results", results_path, "fit.jsonl from the fit command")->required();
  eval->add_option("--trajectory", trajectory_path, "Ground-truth trajectory CSV")->required();
  eval->add_option("--threshold-rad", eval_threshold, "Success threshold in radians (default 0.7)");

  std::string suite;
  CLI::App *experiment = app.add_subcommand("experiment", "Run a simulation experiment suite");
  add_common(experiment);
  experiment->add_option("suite", suite, "noise-sweep | motion-violation | high-dynamics")
      ->required()
      ->check(CLI::IsMember({"noise-sweep", "motion-violation", "high-dynamics"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(common);
    if (*fit) return cmd_fit(common, fit_args);
    if (*eval) return cmd_eval(common, results_path, trajectory_path, eval_threshold);
    if (*experiment) return cmd_experiment(common, suite);
  } catch (const Error &e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == ErrorKind::kConfig ? kExitUsage : kExitRuntime;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

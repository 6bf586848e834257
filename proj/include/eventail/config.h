#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"

#include "eventail/egg.h"
#include "eventail/harness.h"
#include "eventail/motion.h"
#include "eventail/pipeline.h"

namespace eventail {

inline constexpr int kSchemaVersion = 1;

struct SimulationConfig {
  std::optional<Wireframe> segments;  // explicit scene; otherwise `scene` is sampled
  SceneSpec scene;
  MotionModel motion = ConstantTwist{};
  double t0 = 0.0;
  double t1 = 1.0;
  double resolution = 1e-6;
  double trajectory_rate = 200.0;
  ImuModel imu;
  NoiseSpec noise;
};

/// Everything a command can be configured with. Values start at the defaults,
/// are overridden by the config file and then by command-line flags.
struct RunConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  CameraModel camera;
  SimulationConfig simulation;
  FitOptions fit;
  double eval_threshold = 0.7;
  NoiseSweepConfig noise_sweep;
  MotionViolationConfig motion_violation;
  HighDynamicsConfig high_dynamics;
};

/// Throws kConfig with the offending key path on unknown keys, wrong types, a
/// schema version mismatch or out-of-range values.
RunConfig parse_config(const nlohmann::json &j);
RunConfig load_config(const std::filesystem::path &path);

}  // namespace eventail

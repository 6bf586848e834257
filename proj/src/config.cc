#include "eventail/config.h"

#include <fstream>
#include <set>
#include <string>

#include "eventail/errors.h"

namespace eventail {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string &path, const std::string &what) {
  throw Error(ErrorKind::kConfig, "config " + (path.empty() ? std::string("<root>") : path) + ": " + what);
}

// Reads the keys of one JSON object and rejects anything it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto &item : j_.items()) {
      if (!seen_.count(item.key())) fail(child(item.key()), "unknown key");
    }
  }

  const json *find(const std::string &key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const std::string &key, double &out) {
    if (const json *v = find(key)) {
      if (!v->is_number()) fail(child(key), "expected a number");
      out = v->get<double>();
    }
  }
  void integer(const std::string &key, int &out) {
    if (const json *v = find(key)) {
      if (!v->is_number_integer()) fail(child(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void unsigned_integer(const std::string &key, std::uint64_t &out) {
    if (const json *v = find(key)) {
      // literals built in code are signed even when non-negative
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
        fail(child(key), "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void size(const std::string &key, std::size_t &out) {
    std::uint64_t tmp = out;
    unsigned_integer(key, tmp);
    out = static_cast<std::size_t>(tmp);
  }
  void boolean(const std::string &key, bool &out) {
    if (const json *v = find(key)) {
      if (!v->is_boolean()) fail(child(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void vector3(const std::string &key, Eigen::Vector3d &out) {
    if (const json *v = find(key)) out = parse_vector3(*v, child(key));
  }
  void numbers(const std::string &key, std::vector<double> &out) {
    if (const json *v = find(key)) {
      if (!v->is_array()) fail(child(key), "expected an array of numbers");
      out.clear();
      for (const auto &x : *v) {
        if (!x.is_number()) fail(child(key), "expected an array of numbers");
        out.push_back(x.get<double>());
      }
    }
  }
  void rotation(const std::string &key, Eigen::Matrix3d &out) {
    if (const json *v = find(key)) out = parse_quaternion(*v, child(key)).toRotationMatrix();
  }

  static Eigen::Vector3d parse_vector3(const json &v, const std::string &path) {
    if (!v.is_array() || v.size() != 3) fail(path, "expected [x, y, z]");
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number()) fail(path, "expected [x, y, z]");
      out(i) = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
  }

  static Eigen::Quaterniond parse_quaternion(const json &v, const std::string &path) {
    if (!v.is_array() || v.size() != 4) fail(path, "expected a quaternion [qx, qy, qz, qw]");
    double c[4];
    for (std::size_t i = 0; i < 4; ++i) {
      if (!v[i].is_number()) fail(path, "expected a quaternion [qx, qy, qz, qw]");
      c[i] = v[i].get<double>();
    }
    Eigen::Quaterniond q(c[3], c[0], c[1], c[2]);
    if (!(q.norm() > 0.0)) fail(path, "zero quaternion");
    return q.normalized();
  }

 private:
  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_camera(const json &j, const std::string &path, CameraModel &cam) {
  ObjectReader r(j, path);
  r.number("fx", cam.fx);
  r.number("fy", cam.fy);
  r.number("cx", cam.cx);
  r.number("cy", cam.cy);
  r.integer("width", cam.width);
  r.integer("height", cam.height);
}

MotionModel parse_motion(const json &j, const std::string &path) {
  ObjectReader r(j, path);
  const json *type = r.find("type");
  if (!type || !type->is_string()) fail(r.child("type"), "expected one of constant_twist, circular_arc, constant_accel, spline");
  const std::string name = type->get<std::string>();
  if (name == "constant_twist") {
    ConstantTwist m;
    r.vector3("v", m.v);
    r.vector3("omega", m.omega);
    r.vector3("p0", m.p0);
    r.rotation("r0", m.r0);
    return m;
  }
  if (name == "circular_arc") {
    CircularArc m;
    r.number("radius", m.radius);
    r.number("tangential_speed", m.tangential_speed);
    r.vector3("normal", m.normal);
    r.vector3("tangent", m.tangent);
    r.vector3("p0", m.p0);
    r.rotation("r0", m.r0);
    return m;
  }
  if (name == "constant_accel") {
    ConstantAccel m;
    r.vector3("v0", m.v0);
    r.vector3("a", m.a);
    r.vector3("omega", m.omega);
    r.vector3("p0", m.p0);
    r.rotation("r0", m.r0);
    return m;
  }
  if (name == "spline") {
    SplineMotion m;
    r.numbers("times", m.times);
    if (const json *ps = r.find("positions")) {
      if (!ps->is_array()) fail(r.child("positions"), "expected an array of [x, y, z]");
      for (const auto &p : *ps) m.positions.push_back(ObjectReader::parse_vector3(p, r.child("positions")));
    }
    if (const json *qs = r.find("orientations")) {
      if (!qs->is_array()) fail(r.child("orientations"), "expected an array of quaternions");
      for (const auto &q : *qs) m.orientations.push_back(ObjectReader::parse_quaternion(q, r.child("orientations")));
    }
    return m;
  }
  fail(r.child("type"), "unknown motion type '" + name + "'");
}

void parse_scene(const json &j, const std::string &path, SimulationConfig &sim) {
  ObjectReader r(j, path);
  if (const json *segs = r.find("segments")) {
    if (!segs->is_array()) fail(r.child("segments"), "expected an array of [ax, ay, az, bx, by, bz]");
    Wireframe w;
    for (const auto &s : *segs) {
      if (!s.is_array() || s.size() != 6) fail(r.child("segments"), "expected [ax, ay, az, bx, by, bz]");
      double c[6];
      for (std::size_t i = 0; i < 6; ++i) {
        if (!s[i].is_number()) fail(r.child("segments"), "expected numbers");
        c[i] = s[i].get<double>();
      }
      w.segments.push_back({{c[0], c[1], c[2]}, {c[3], c[4], c[5]}});
    }
    sim.segments = std::move(w);
  }
  if (const json *random = r.find("random")) {
    ObjectReader rr(*random, r.child("random"));
    rr.integer("count", sim.scene.count);
    rr.vector3("lo", sim.scene.lo);
    rr.vector3("hi", sim.scene.hi);
    rr.number("min_length", sim.scene.min_length);
  }
}

void parse_imu(const json &j, const std::string &path, ImuModel &imu) {
  ObjectReader r(j, path);
  r.number("rate", imu.rate);
  r.vector3("gyro_bias0", imu.gyro_bias0);
  r.number("gyro_bias_random_walk", imu.gyro_bias_random_walk);
  r.number("gyro_noise", imu.gyro_noise);
  r.vector3("accel_bias0", imu.accel_bias0);
  r.number("accel_bias_random_walk", imu.accel_bias_random_walk);
  r.number("accel_noise", imu.accel_noise);
}

void parse_noise(const json &j, const std::string &path, NoiseSpec &noise) {
  ObjectReader r(j, path);
  r.number("pixel_magnitude", noise.pixel_magnitude);
  r.number("timestamp_std", noise.timestamp_std);
  r.number("omega_magnitude", noise.omega_magnitude);
}

void parse_ransac(const json &j, const std::string &path, RansacConfig &rc) {
  ObjectReader r(j, path);
  r.integer("max_iterations", rc.max_iterations);
  r.number("inlier_threshold", rc.inlier_threshold);
  if (const json *s = r.find("sampling")) {
    if (!s->is_string()) fail(r.child("sampling"), "expected a strategy name");
    try {
      rc.sampling = sampling_from_string(s->get<std::string>());
    } catch (const Error &e) {
      fail(r.child("sampling"), e.what());
    }
  }
  r.integer("min_inliers", rc.min_inliers);
  r.number("confidence", rc.confidence);
  r.boolean("adaptive", rc.adaptive);
  r.number("neighborhood_radius", rc.neighborhood_radius);
  r.number("suppression_factor", rc.suppression_factor);
  r.integer("refine_rounds", rc.refine_rounds);
}

void parse_fit(const json &j, const std::string &path, FitOptions &fit) {
  ObjectReader r(j, path);
  r.number("window_sec", fit.window_sec);
  r.integer("downsample", fit.downsample);
  r.integer("max_clusters", fit.max_clusters);
  r.integer("jobs", fit.jobs);
  if (const json *rc = r.find("ransac")) parse_ransac(*rc, r.child("ransac"), fit.ransac);
  if (const json *av = r.find("averaging")) {
    ObjectReader ar(*av, r.child("averaging"));
    ar.number("gap_ratio", fit.averaging.gap_ratio);
    ar.number("min_line_angle", fit.averaging.min_line_angle);
  }
}

void parse_experiments(const json &j, const std::string &path, RunConfig &cfg) {
  ObjectReader r(j, path);
  if (const json *ns = r.find("noise_sweep")) {
    ObjectReader nr(*ns, r.child("noise_sweep"));
    auto &c = cfg.noise_sweep;
    nr.integer("configurations", c.configurations);
    nr.integer("evaluations", c.evaluations);
    nr.numbers("pixel_levels", c.pixel_levels);
    nr.numbers("timestamp_levels_ms", c.timestamp_levels);
    nr.numbers("omega_levels_deg", c.omega_levels);
  }
  if (const json *mv = r.find("motion_violation")) {
    ObjectReader mr(*mv, r.child("motion_violation"));
    auto &c = cfg.motion_violation;
    mr.numbers("radii", c.radii);
    mr.numbers("accelerations", c.accelerations);
    mr.integer("seeds", c.seeds);
    mr.integer("lines", c.lines);
    mr.number("duration", c.duration);
    mr.number("gyro_bias", c.gyro_bias);
    mr.size("max_cluster_events", c.max_cluster_events);
    mr.boolean("include_control", c.include_control);
    if (const json *n = mr.find("noise")) parse_noise(*n, mr.child("noise"), c.noise);
    if (const json *rc = mr.find("ransac")) parse_ransac(*rc, mr.child("ransac"), c.ransac);
  }
  if (const json *hd = r.find("high_dynamics")) {
    ObjectReader hr(*hd, r.child("high_dynamics"));
    auto &c = cfg.high_dynamics;
    hr.integer("downsample", c.downsample);
    hr.integer("max_models", c.max_models);
    hr.number("gyro_bias", c.gyro_bias);
    hr.number("plane_threshold", c.plane.threshold);
    hr.integer("plane_max_models", c.plane.max_models);
    if (const json *n = hr.find("noise")) parse_noise(*n, hr.child("noise"), c.noise);
    if (const json *rc = hr.find("ransac")) parse_ransac(*rc, hr.child("ransac"), c.ransac);
  }
}

}  // namespace

RunConfig parse_config(const json &j) {
  RunConfig cfg;
  {
    ObjectReader r(j, "");
    const json *version = r.find("schema_version");
    if (!version) fail("schema_version", "missing");
    if (!version->is_number_integer() || version->get<int>() != kSchemaVersion) {
      fail("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
    }
    r.unsigned_integer("seed", cfg.seed);
    if (const json *c = r.find("camera")) parse_camera(*c, "camera", cfg.camera);
    if (const json *s = r.find("scene")) parse_scene(*s, "scene", cfg.simulation);
    if (const json *m = r.find("motion")) cfg.simulation.motion = parse_motion(*m, "motion");
    if (const json *s = r.find("simulation")) {
      ObjectReader sr(*s, "simulation");
      sr.number("t0", cfg.simulation.t0);
      sr.number("t1", cfg.simulation.t1);
      sr.number("resolution", cfg.simulation.resolution);
      sr.number("trajectory_rate", cfg.simulation.trajectory_rate);
    }
    if (const json *i = r.find("imu")) parse_imu(*i, "imu", cfg.simulation.imu);
    if (const json *n = r.find("noise")) parse_noise(*n, "noise", cfg.simulation.noise);
    if (const json *f = r.find("fit")) parse_fit(*f, "fit", cfg.fit);
    if (const json *e = r.find("eval")) {
      ObjectReader er(*e, "eval");
      er.number("threshold_rad", cfg.eval_threshold);
    }
    if (const json *x = r.find("experiments")) parse_experiments(*x, "experiments", cfg);
  }
  cfg.fit.camera = cfg.camera;
  try {
    cfg.camera.validate();
    validate(cfg.simulation.motion);
    cfg.simulation.imu.validate();
    cfg.simulation.noise.validate();
    cfg.fit.validate();
    if (!(cfg.simulation.t1 > cfg.simulation.t0) || cfg.simulation.t0 < 0.0) {
      throw Error(ErrorKind::kValidation, "simulation needs 0 <= t0 < t1");
    }
    if (!(cfg.eval_threshold > 0.0)) throw Error(ErrorKind::kValidation, "eval.threshold_rad must be > 0");
  } catch (const Error &e) {
    throw Error(ErrorKind::kConfig, std::string("invalid config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw Error(ErrorKind::kConfig, "config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace eventail

#include "eventail/egg.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "eventail/errors.h"

namespace eventail {

Eigen::Vector3d random_unit_vector(Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    const Eigen::Vector3d x(normal(rng), normal(rng), normal(rng));
    const double n = x.norm();
    if (n > 1e-9) return x / n;
  }
}

Wireframe generate_scene(const SceneSpec &spec, std::uint64_t seed) {
  if (spec.count < 1) throw Error(ErrorKind::kValidation, "generate_scene: count must be >= 1");
  if (!((spec.hi - spec.lo).array() > 0.0).all()) throw Error(ErrorKind::kValidation, "generate_scene: empty bounds");
  if (spec.min_length >= (spec.hi - spec.lo).norm()) {
    throw Error(ErrorKind::kValidation, "generate_scene: min_length does not fit in the bounds");
  }
  Rng rng = make_rng(seed, 0x5ce);
  auto point = [&] {
    Eigen::Vector3d p;
    for (int i = 0; i < 3; ++i) p(i) = std::uniform_real_distribution<double>(spec.lo(i), spec.hi(i))(rng);
    return p;
  };
  Wireframe scene;
  while (static_cast<int>(scene.segments.size()) < spec.count) {
    Segment s{point(), point()};
    const double len = (s.b - s.a).norm();
    if (len > 0.0 && len >= spec.min_length) scene.segments.push_back(s);
  }
  return scene;
}

void ImuModel::validate() const {
  if (!(rate > 0.0)) throw Error(ErrorKind::kValidation, "imu rate must be > 0");
  if (gyro_bias_random_walk < 0.0 || gyro_noise < 0.0 || accel_bias_random_walk < 0.0 || accel_noise < 0.0) {
    throw Error(ErrorKind::kValidation, "imu noise parameters must be >= 0");
  }
}

void NoiseSpec::validate() const {
  if (pixel_magnitude < 0.0 || timestamp_std < 0.0 || omega_magnitude < 0.0) {
    throw Error(ErrorKind::kValidation, "noise magnitudes must be >= 0");
  }
}

namespace {

constexpr double kMinDepth = 0.05;

struct SegmentState {
  bool valid = false;
  Eigen::Vector3d a_c, b_c;
  Eigen::Vector2d pa, pb, mid;
  Eigen::Vector3d normal;
};

SegmentState state_at(const Segment &seg, const MotionModel &motion, const CameraModel &cam, double t) {
  const Pose pose = pose_at(motion, t);
  SegmentState s;
  s.a_c = pose.rotation.transpose() * (seg.a - pose.position);
  s.b_c = pose.rotation.transpose() * (seg.b - pose.position);
  s.valid = s.a_c.z() > kMinDepth && s.b_c.z() > kMinDepth;
  if (!s.valid) return s;
  s.pa = project(cam, s.a_c);
  s.pb = project(cam, s.b_c);
  s.mid = project(cam, 0.5 * (s.a_c + s.b_c));
  s.normal = s.a_c.cross(s.b_c);
  return s;
}

// Parameter of the segment point closest to the ray through the origin along f, and the ray depth.
std::pair<double, double> ray_segment(const Eigen::Vector3d &f, const Eigen::Vector3d &a, const Eigen::Vector3d &b) {
  const Eigen::Vector3d dir = b - a;
  const Eigen::Vector3d w0 = -a;
  const double bb = f.dot(dir);
  const double c = dir.squaredNorm();
  const double ff = f.squaredNorm();
  const double denom = ff * c - bb * bb;
  if (std::abs(denom) < 1e-18 * ff * c) return {-1.0, -1.0};
  const double depth = (bb * dir.dot(w0) - c * f.dot(w0)) / denom;
  const double mu = (dir.dot(w0) + depth * bb) / c;
  return {mu, depth};
}

struct RawEvent {
  std::int64_t t_us;
  double u, v;
  int p;
  int label;
};

class Rasterizer {
 public:
  Rasterizer(const CameraModel &cam) : cam_(cam), bearings_(static_cast<std::size_t>(cam.width * cam.height)) {
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) bearings_[index(x, y)] = backproject(cam, x, y);
    }
  }

  const Eigen::Vector3d &bearing(int x, int y) const { return bearings_[index(x, y)]; }

  // Calls visit(x, y) for every pixel center near the band swept between two segment states.
  template <class Visit>
  void sweep(const SegmentState &s0, const SegmentState &s1, Visit &&visit) const {
    const Eigen::Vector2d d = s0.pb - s0.pa;
    const int major = std::abs(d.x()) >= std::abs(d.y()) ? 0 : 1;
    const int minor = 1 - major;
    const int major_size = major == 0 ? cam_.width : cam_.height;
    const int minor_size = major == 0 ? cam_.height : cam_.width;
    const double lo = std::min({s0.pa(major), s0.pb(major), s1.pa(major), s1.pb(major)});
    const double hi = std::max({s0.pa(major), s0.pb(major), s1.pa(major), s1.pb(major)});
    const int c0 = std::max(0, static_cast<int>(std::floor(lo)));
    const int c1 = std::min(major_size - 1, static_cast<int>(std::ceil(hi)));
    for (int c = c0; c <= c1; ++c) {
      double mlo = std::numeric_limits<double>::infinity();
      double mhi = -mlo;
      for (const SegmentState *s : {&s0, &s1}) {
        const double den = s->pb(major) - s->pa(major);
        if (std::abs(den) < 1e-9) {
          mlo = std::min({mlo, s->pa(minor), s->pb(minor)});
          mhi = std::max({mhi, s->pa(minor), s->pb(minor)});
        } else {
          const double m = s->pa(minor) + (c - s->pa(major)) * (s->pb(minor) - s->pa(minor)) / den;
          mlo = std::min(mlo, m);
          mhi = std::max(mhi, m);
        }
      }
      const int r0 = std::max(0, static_cast<int>(std::floor(mlo)) - 1);
      const int r1 = std::min(minor_size - 1, static_cast<int>(std::ceil(mhi)) + 1);
      for (int r = r0; r <= r1; ++r) {
        if (major == 0) {
          visit(c, r);
        } else {
          visit(r, c);
        }
      }
    }
  }

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * cam_.width + x; }
  CameraModel cam_;
  std::vector<Eigen::Vector3d> bearings_;
};

void simulate_segment(const Segment &seg, int label, const MotionModel &motion, const CameraModel &cam,
                      const Rasterizer &raster, double t0, double t1, double resolution,
                      std::vector<RawEvent> &out) {
  double dt = std::min(1e-3, t1 - t0);
  double t = t0;
  SegmentState sa = state_at(seg, motion, cam, t);
  while (t < t1) {
    const double tb = std::min(t + dt, t1);
    SegmentState sb = state_at(seg, motion, cam, tb);
    double disp = 0.0;
    if (sa.valid && sb.valid) {
      disp = std::max({(sb.pa - sa.pa).norm(), (sb.pb - sa.pb).norm(), (sb.mid - sa.mid).norm()});
      if (disp > 0.5 && dt > 1e-9) {
        dt *= 0.5;
        continue;
      }
      raster.sweep(sa, sb, [&](int x, int y) {
        const Eigen::Vector3d &f = raster.bearing(x, y);
        const bool pos_a = f.dot(sa.normal) >= 0.0;
        const bool pos_b = f.dot(sb.normal) >= 0.0;
        if (pos_a == pos_b) return;
        // Illinois-modified regula falsi on g(t) = f . n(t), kept bracketed.
        auto g = [&](double tt) {
          const Pose pose = pose_at(motion, tt);
          const Eigen::Matrix3d rt = pose.rotation.transpose();
          return f.dot((rt * (seg.a - pose.position)).cross(rt * (seg.b - pose.position)));
        };
        double lo = t, hi = tb;
        double g_lo = f.dot(sa.normal), g_hi = f.dot(sb.normal);
        int side = 0;
        for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
          double mid = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
          if (!(mid > lo && mid < hi) || it % 4 == 3) mid = 0.5 * (lo + hi);
          const double g_mid = g(mid);
          if ((g_mid >= 0.0) == pos_a) {
            lo = mid;
            g_lo = g_mid;
            if (side == -1) g_hi *= 0.5;
            side = -1;
          } else {
            hi = mid;
            g_hi = g_mid;
            if (side == 1) g_lo *= 0.5;
            side = 1;
          }
        }
        const double tc = 0.5 * (lo + hi);
        const double tq = std::round(tc / resolution) * resolution;
        const SegmentState sq = state_at(seg, motion, cam, tq);
        if (!sq.valid) return;
        const auto [mu, depth] = ray_segment(f, sq.a_c, sq.b_c);
        if (mu < 0.0 || mu > 1.0 || depth <= 0.0) return;
        const Eigen::Vector2d dir = (sq.pb - sq.pa).normalized();
        const Eigen::Vector2d pixel(x, y);
        const Eigen::Vector2d snapped = sq.pa + (pixel - sq.pa).dot(dir) * dir;
        out.push_back({std::llround(tq * 1e6), snapped.x(), snapped.y(), pos_a ? -1 : 1, label});
      });
    }
    t = tb;
    sa = std::move(sb);
    if (disp < 0.2) dt = std::min(dt * 1.5, t1 - t0);
  }
}

}  // namespace

SimulatedEvents simulate_events(const Wireframe &scene, const MotionModel &motion, const CameraModel &cam, double t0,
                                double t1, double resolution) {
  cam.validate();
  validate(motion);
  if (!(t1 > t0)) throw Error(ErrorKind::kValidation, "simulate_events: t1 must be greater than t0");
  if (t0 < 0.0) throw Error(ErrorKind::kValidation, "simulate_events: timestamps must be non-negative");
  if (!(resolution > 0.0)) throw Error(ErrorKind::kValidation, "simulate_events: resolution must be positive");
  const Rasterizer raster(cam);
  std::vector<RawEvent> raw;
  for (std::size_t i = 0; i < scene.segments.size(); ++i) {
    simulate_segment(scene.segments[i], static_cast<int>(i), motion, cam, raster, t0, t1, resolution, raw);
  }
  std::sort(raw.begin(), raw.end(), [](const RawEvent &a, const RawEvent &b) {
    return std::tie(a.t_us, a.label, a.v, a.u) < std::tie(b.t_us, b.label, b.v, b.u);
  });
  SimulatedEvents out;
  out.events.reserve(raw.size());
  out.labels.reserve(raw.size());
  for (const RawEvent &r : raw) {
    out.events.push_back({r.t_us, r.u, r.v, r.p});
    out.labels.push_back(r.label);
  }
  return out;
}

std::vector<ImuSample> simulate_imu(const MotionModel &motion, const ImuModel &imu, double t0, double t1,
                                    std::uint64_t seed) {
  imu.validate();
  if (!(t1 > t0)) throw Error(ErrorKind::kValidation, "simulate_imu: t1 must be greater than t0");
  const Eigen::Vector3d gravity(0.0, 9.81, 0.0);  // world y points down
  Rng rng = make_rng(seed, 0x1a0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto noise = [&](double std) {
    Eigen::Vector3d n(normal(rng), normal(rng), normal(rng));
    return (std * n).eval();
  };
  const double dt = 1.0 / imu.rate;
  const auto n = static_cast<std::int64_t>(std::llround((t1 - t0) * imu.rate));
  Eigen::Vector3d gyro_bias = imu.gyro_bias0;
  Eigen::Vector3d accel_bias = imu.accel_bias0;
  std::vector<ImuSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    const Pose pose = pose_at(motion, t);
    ImuSample s;
    s.t = t;
    s.omega = omega_at(motion, t) + gyro_bias + noise(imu.gyro_noise);
    s.accel = pose.rotation.transpose() * (acceleration_at(motion, t) - gravity) + accel_bias + noise(imu.accel_noise);
    out.push_back(s);
    gyro_bias += noise(imu.gyro_bias_random_walk * std::sqrt(dt));
    accel_bias += noise(imu.accel_bias_random_walk * std::sqrt(dt));
  }
  return out;
}

std::vector<TrajectorySample> sample_trajectory(const MotionModel &motion, double t0, double t1, double rate) {
  if (!(rate > 0.0) || !(t1 > t0)) throw Error(ErrorKind::kValidation, "sample_trajectory: invalid range or rate");
  const auto n = static_cast<std::int64_t>(std::floor((t1 - t0) * rate + 1e-9));
  std::vector<TrajectorySample> out;
  for (std::int64_t k = 0; k <= n; ++k) {
    const double t = t0 + static_cast<double>(k) / rate;
    const Pose pose = pose_at(motion, t);
    out.push_back({t, pose.position, Eigen::Quaterniond(pose.rotation).normalized(), velocity_at(motion, t)});
  }
  if (out.back().t < t1 - 1e-9) {
    const Pose pose = pose_at(motion, t1);
    out.push_back({t1, pose.position, Eigen::Quaterniond(pose.rotation).normalized(), velocity_at(motion, t1)});
  }
  return out;
}

std::vector<Event> corrupt(const std::vector<Event> &events, const NoiseSpec &spec, std::uint64_t seed,
                           std::vector<std::size_t> *order) {
  spec.validate();
  Rng rng = make_rng(seed, 0xc0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<Event> noisy = events;
  for (Event &e : noisy) {
    if (spec.pixel_magnitude > 0.0) {
      const double a = angle(rng);
      e.u += spec.pixel_magnitude * std::cos(a);
      e.v += spec.pixel_magnitude * std::sin(a);
    }
    if (spec.timestamp_std > 0.0) {
      e.t_us = std::max<std::int64_t>(0, e.t_us + std::llround(spec.timestamp_std * jitter(rng) * 1e6));
    }
  }
  std::vector<std::size_t> idx(noisy.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return noisy[a].t_us < noisy[b].t_us; });
  std::vector<Event> out;
  out.reserve(noisy.size());
  for (std::size_t i : idx) out.push_back(noisy[i]);
  if (order) *order = std::move(idx);
  return out;
}

std::vector<ImuSample> corrupt_gyro(const std::vector<ImuSample> &samples, double omega_magnitude,
                                    std::uint64_t seed) {
  if (omega_magnitude < 0.0) throw Error(ErrorKind::kValidation, "corrupt_gyro: magnitude must be >= 0");
  Rng rng = make_rng(seed, 0x9e0);
  std::vector<ImuSample> out = samples;
  if (omega_magnitude == 0.0) return out;
  for (ImuSample &s : out) s.omega += omega_magnitude * random_unit_vector(rng);
  return out;
}

// ---------------------------------------------------------------------------

const char *to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::kRandom: return "random";
    case SamplingStrategy::kTemporal: return "temporal";
    case SamplingStrategy::kSpatial: return "spatial";
    case SamplingStrategy::kSpatiotemporal: return "spatiotemporal";
  }
  return "unknown";
}

SamplingStrategy sampling_from_string(const std::string &name) {
  for (auto s : {SamplingStrategy::kRandom, SamplingStrategy::kTemporal, SamplingStrategy::kSpatial,
                 SamplingStrategy::kSpatiotemporal}) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorKind::kConfig, "unknown sampling strategy '" + name + "'");
}

PixelSample SingleLineInstance::observe(double s, double t) const {
  const Eigen::Vector3d x = a + s * (b - a);
  const Eigen::Vector3d xc = rotation_at(twist.omega, t).transpose() * (x - camera_center_at(twist.v, t));
  const Eigen::Vector2d uv = project(camera, xc);
  return {t, uv.x(), uv.y()};
}

std::vector<PixelSample> SingleLineInstance::sample(SamplingStrategy strategy, int n, Rng &rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  if (strategy == SamplingStrategy::kSpatiotemporal) std::shuffle(perm.begin(), perm.end(), rng);
  const bool stratify_space = strategy == SamplingStrategy::kSpatial || strategy == SamplingStrategy::kSpatiotemporal;
  const bool stratify_time = strategy == SamplingStrategy::kTemporal || strategy == SamplingStrategy::kSpatiotemporal;
  std::vector<PixelSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = stratify_space ? (i + unit(rng)) / n : unit(rng);
    const double bin = stratify_time ? perm[static_cast<std::size_t>(i)] + unit(rng) : n * unit(rng);
    const double t = -half_window + 2.0 * half_window * bin / n;
    out.push_back(observe(s, t));
  }
  return out;
}

EventSet SingleLineInstance::to_bearings(const std::vector<PixelSample> &samples, const NoiseSpec &noise,
                                         Rng &rng) const {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const Eigen::Vector3d omega =
      twist.omega + (noise.omega_magnitude > 0.0 ? (noise.omega_magnitude * random_unit_vector(rng)).eval()
                                                 : Eigen::Vector3d::Zero().eval());
  EventSet set;
  for (PixelSample s : samples) {
    if (noise.pixel_magnitude > 0.0) {
      const double a = angle(rng);
      s.u += noise.pixel_magnitude * std::cos(a);
      s.v += noise.pixel_magnitude * std::sin(a);
    }
    if (noise.timestamp_std > 0.0) s.t += noise.timestamp_std * jitter(rng);
    set.events.push_back({rotation_at(omega, s.t) * backproject(camera, s.u, s.v), s.t});
  }
  std::stable_sort(set.events.begin(), set.events.end(),
                   [](const BearingEvent &x, const BearingEvent &y) { return x.t_prime < y.t_prime; });
  return set;
}

SingleLineInstance single_line_instance(std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x511);
  SingleLineInstance inst;
  const CameraModel &cam = inst.camera;
  const double hw = inst.half_window;
  const double diagonal = std::hypot(cam.width, cam.height);
  std::uniform_real_distribution<double> ux(0.0, cam.width - 1.0), uy(0.0, cam.height - 1.0);
  auto pixel = [&] { return Eigen::Vector2d(ux(rng), uy(rng)); };

  for (;;) {
    inst.twist.v = random_unit_vector(rng) * 1.0;
    inst.twist.omega = random_unit_vector(rng) * (M_PI / 2.0);
    const Eigen::Vector2d a0 = pixel(), b0 = pixel(), a1 = pixel(), b1 = pixel();
    if ((a0 - b0).norm() < 100.0 || (a1 - b1).norm() < 100.0) continue;

    const Eigen::Vector3d c0 = camera_center_at(inst.twist.v, -hw);
    const Eigen::Vector3d c1 = camera_center_at(inst.twist.v, hw);
    const Eigen::Matrix3d r0 = rotation_at(inst.twist.omega, -hw);
    const Eigen::Matrix3d r1 = rotation_at(inst.twist.omega, hw);
    const Eigen::Vector3d n1 = (r1 * backproject(cam, a1.x(), a1.y())).cross(r1 * backproject(cam, b1.x(), b1.y()));
    const Eigen::Vector3d ra = r0 * backproject(cam, a0.x(), a0.y());
    const Eigen::Vector3d rb = r0 * backproject(cam, b0.x(), b0.y());
    const double la = n1.dot(c1 - c0) / n1.dot(ra);
    const double lb = n1.dot(c1 - c0) / n1.dot(rb);
    if (!(la > 0.3 && la < 20.0 && lb > 0.3 && lb < 20.0)) continue;
    inst.a = c0 + la * ra;
    inst.b = c0 + lb * rb;

    bool in_front = true;
    for (int k = 0; k <= 20 && in_front; ++k) {
      const double t = -hw + 2.0 * hw * k / 20.0;
      const Eigen::Matrix3d rt = rotation_at(inst.twist.omega, t).transpose();
      const Eigen::Vector3d c = camera_center_at(inst.twist.v, t);
      for (double s : {0.0, 0.5, 1.0}) {
        in_front = in_front && (rt * (inst.a + s * (inst.b - inst.a) - c)).z() > 0.3;
      }
    }
    if (!in_front) continue;
    const double sweep = (Eigen::Vector2d(inst.observe(0.5, hw).u, inst.observe(0.5, hw).v) -
                          Eigen::Vector2d(inst.observe(0.5, -hw).u, inst.observe(0.5, -hw).v))
                             .norm();
    if (sweep < 0.25 * diagonal) continue;
    return inst;
  }
}

}  // namespace eventail

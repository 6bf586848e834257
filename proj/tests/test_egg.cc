#include <cmath>
#include <numeric>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "doctest.h"

#include "eventail/egg.h"
#include "eventail/errors.h"
#include "eventail/model.h"
#include "eventail/motion.h"

using namespace eventail;

namespace {

double distance_to_projection(const CameraModel &cam, const Pose &pose, const Segment &seg, const Event &e) {
  const Eigen::Vector2d a = project(cam, pose.rotation.transpose() * (seg.a - pose.position));
  const Eigen::Vector2d b = project(cam, pose.rotation.transpose() * (seg.b - pose.position));
  const Eigen::Vector2d d = (b - a).normalized();
  const Eigen::Vector2d p(e.u - a.x(), e.v - a.y());
  return std::abs(p.x() * d.y() - p.y() * d.x());
}

}  // namespace

TEST_CASE("poses of the motion models") {
  ConstantTwist twist;
  twist.v = {1.0, 0.0, 0.0};
  const Pose p = pose_at(twist, 0.5);
  CHECK((p.position - Eigen::Vector3d(0.5, 0.0, 0.0)).norm() == 0.0);
  CHECK(p.rotation == Eigen::Matrix3d::Identity());

  CircularArc arc;
  arc.radius = 2.0;
  arc.tangential_speed = 1.0;
  const double half_turn = M_PI * arc.radius / arc.tangential_speed;
  const Eigen::Vector3d center = 0.5 * (pose_at(arc, 0.0).position + pose_at(arc, half_turn).position);
  for (double t = 0.0; t < 10.0; t += 0.37) {
    CHECK((pose_at(arc, t).position - center).norm() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(velocity_at(arc, t).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK((velocity_at(arc, 0.0) - arc.tangent.normalized()).norm() < 1e-12);

  ConstantAccel accel;
  accel.v0 = {0.3, -0.2, 1.0};
  accel.a = {0.5, 0.1, -0.4};
  for (double t : {0.0, 0.2, 1.3}) {
    CHECK((pose_at(accel, t).position - (accel.v0 * t + 0.5 * accel.a * t * t)).norm() < 1e-14);
    const double h = 1e-5;
    const Eigen::Vector3d fd = (pose_at(accel, t + h).position - pose_at(accel, t - h).position) / (2.0 * h);
    CHECK((fd - velocity_at(accel, t)).norm() < 1e-8);
  }

  SplineMotion spline;
  spline.times = {0.0, 0.5, 1.0, 1.5};
  spline.positions = {{0, 0, 0}, {0.5, 0.1, 0}, {1.0, 0.0, 0.2}, {1.5, -0.1, 0.3}};
  spline.orientations.assign(4, Eigen::Quaterniond::Identity());
  CHECK((pose_at(spline, 0.5).position - spline.positions[1]).norm() < 1e-12);
  const Pose a = pose_at(spline, 0.7 - 1e-9), b = pose_at(spline, 0.7 + 1e-9);
  CHECK((a.position - b.position).norm() < 1e-7);
  CHECK_THROWS_AS(pose_at(spline, 2.0), Error);
  spline.times = {0.0, 0.5, 0.5, 1.5};
  CHECK_THROWS_AS(validate(MotionModel(spline)), Error);

  CircularArc bad;
  bad.radius = 0.0;
  CHECK_THROWS_AS(validate(MotionModel(bad)), Error);
}

TEST_CASE("a static camera sees nothing") {
  Wireframe scene;
  scene.segments.push_back({{-1.0, 0.0, 3.0}, {1.0, 0.5, 3.0}});
  CHECK(simulate_events(scene, ConstantTwist{}, CameraModel{}, 0.0, 0.3).events.empty());
}

TEST_CASE("events reproject onto their source segment") {
  const Wireframe scene = generate_scene(SceneSpec{}, 3);
  ConstantTwist twist;
  twist.v = {0.5, -0.3, 0.4};
  twist.omega = {0.2, 0.5, -0.3};
  const CameraModel cam;
  const SimulatedEvents sim = simulate_events(scene, twist, cam, 0.0, 0.2);
  REQUIRE(sim.events.size() > 1000);
  REQUIRE(sim.labels.size() == sim.events.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sim.events.size(); ++i) {
    const Event &e = sim.events[i];
    // pixel centers are snapped onto the line at the quantized timestamp, a sub-millipixel shift
    CHECK(e.u > -1e-3);
    CHECK(e.v > -1e-3);
    CHECK(e.u < cam.width - 1 + 1e-3);
    CHECK(e.v < cam.height - 1 + 1e-3);
    if (i > 0) CHECK(e.t_us >= sim.events[i - 1].t_us);
    const Pose pose = pose_at(twist, e.t_sec());
    worst = std::max(worst, distance_to_projection(cam, pose, scene.segments[sim.labels[i]], e));
  }
  CHECK(worst < 1e-3);
  // deterministic
  CHECK(simulate_events(scene, twist, cam, 0.0, 0.2).events == sim.events);
}

TEST_CASE("fronto-parallel translation of a constant-depth line is planar") {
  Wireframe scene;
  scene.segments.push_back({{-1.0, -0.5, 3.0}, {0.8, 0.7, 3.0}});
  ConstantTwist twist;
  twist.v = {0.6, 0.2, 0.0};
  const CameraModel cam;
  const auto events = simulate_events(scene, twist, cam, 0.0, 0.3).events;
  REQUIRE(events.size() > 200);
  Eigen::MatrixXd pts(events.size(), 3);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Eigen::Vector3d f = backproject(cam, events[i].u, events[i].v);
    pts.row(i) << f.x() / f.z(), f.y() / f.z(), events[i].t_sec();
  }
  const Eigen::RowVector3d mean = pts.colwise().mean();
  pts.rowwise() -= mean;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(pts, Eigen::ComputeThinV);
  const Eigen::Vector3d n = svd.matrixV().col(2);
  CHECK((pts * n).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("IMU simulation") {
  ConstantTwist twist;
  twist.omega = {0.1, -2.0, 0.7};
  const auto clean = simulate_imu(twist, ImuModel{}, 0.0, 0.3, 5);
  CHECK(clean.size() == 60);
  for (std::size_t k = 0; k < clean.size(); ++k) {
    CHECK(clean[k].t == doctest::Approx(k / 200.0));
    CHECK(clean[k].omega == twist.omega);
  }

  ImuModel walk;
  walk.gyro_bias_random_walk = 0.01;
  CHECK(simulate_imu(twist, walk, 0.0, 0.3, 9)[17].omega == simulate_imu(twist, walk, 0.0, 0.3, 9)[17].omega);

  // the bias variance grows linearly: normalized squares follow chi-square at two horizons
  const ConstantTwist still;
  const int seeds = 1000;
  for (int k : {100, 400}) {
    double chi2 = 0.0;
    for (int s = 0; s < seeds; ++s) {
      const auto samples = simulate_imu(still, walk, 0.0, 2.01, s);
      const double var = walk.gyro_bias_random_walk * walk.gyro_bias_random_walk * k / walk.rate;
      chi2 += samples[k].omega.squaredNorm() / var;
    }
    const double dof = 3.0 * seeds;
    // two-sided 1% bounds from the normal approximation
    CHECK(std::abs(chi2 - dof) < 2.576 * std::sqrt(2.0 * dof));
  }

  ImuModel bad;
  bad.rate = 0.0;
  CHECK_THROWS_AS(simulate_imu(twist, bad, 0.0, 0.3, 0), Error);
}

TEST_CASE("event corruption") {
  const Wireframe scene = generate_scene(SceneSpec{}, 8);
  ConstantTwist twist;
  twist.v = {0.2, 0.5, 0.3};
  const auto events = simulate_events(scene, twist, CameraModel{}, 0.0, 0.1).events;
  REQUIRE(events.size() > 1000);
  CHECK(corrupt(events, NoiseSpec{}, 1) == events);

  std::vector<std::size_t> order;
  const auto shifted = corrupt(events, {1.5, 0.0, 0.0}, 2, &order);
  REQUIRE(shifted.size() == events.size());
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    const Event &src = events[order[i]];
    CHECK(std::hypot(shifted[i].u - src.u, shifted[i].v - src.v) == doctest::Approx(1.5).epsilon(1e-12));
  }

  const double sigma = 1e-3;
  const auto jittered = corrupt(events, {0.0, sigma, 0.0}, 3, &order);
  double sum = 0.0;
  for (std::size_t i = 0; i < jittered.size(); ++i) {
    if (i > 0) CHECK(jittered[i].t_us >= jittered[i - 1].t_us);
    sum += (jittered[i].t_us - events[order[i]].t_us) * 1e-6;
  }
  const double n = static_cast<double>(jittered.size());
  CHECK(std::abs(sum / n) < 4.0 * sigma / std::sqrt(n));
  CHECK(corrupt(events, {0.0, sigma, 0.0}, 3) == jittered);
  CHECK_THROWS_AS(corrupt(events, {-1.0, 0.0, 0.0}, 3), Error);
}

TEST_CASE("scene generation") {
  const SceneSpec spec;
  const Wireframe scene = generate_scene(spec, 42);
  REQUIRE(scene.segments.size() == 10);
  for (const auto &s : scene.segments) {
    for (const Eigen::Vector3d &p : {s.a, s.b}) {
      CHECK(((p - spec.lo).array() >= 0.0).all());
      CHECK(((spec.hi - p).array() >= 0.0).all());
    }
    CHECK((s.a - s.b).norm() > 0.0);
  }
  const Wireframe again = generate_scene(spec, 42);
  for (std::size_t i = 0; i < scene.segments.size(); ++i) {
    CHECK(again.segments[i].a == scene.segments[i].a);
    CHECK(again.segments[i].b == scene.segments[i].b);
  }
  SceneSpec none = spec;
  none.count = 0;
  CHECK_THROWS_AS(generate_scene(none, 42), Error);
  SceneSpec flat = spec;
  flat.hi.z() = flat.lo.z();
  CHECK_THROWS_AS(generate_scene(flat, 42), Error);
}

TEST_CASE("single line instances") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SingleLineInstance inst = single_line_instance(seed);
    CHECK(inst.camera.width == 640);
    CHECK(inst.camera.height == 480);
    CHECK(inst.camera.fx == 320.0);
    CHECK(inst.half_window == 0.25);
    CHECK(inst.twist.v.norm() == doctest::Approx(1.0));
    CHECK(inst.twist.omega.norm() == doctest::Approx(M_PI / 2.0));

    const EventailModel truth = model_from_line_and_velocity(inst.line(), inst.twist.v, Eigen::Matrix3d::Identity());
    for (auto strategy : {SamplingStrategy::kRandom, SamplingStrategy::kTemporal, SamplingStrategy::kSpatial,
                          SamplingStrategy::kSpatiotemporal}) {
      Rng rng = make_rng(seed, 1);
      const auto samples = inst.sample(strategy, 50, rng);
      for (const auto &s : samples) CHECK(std::abs(s.t) <= inst.half_window);
      const EventSet set = inst.to_bearings(samples, {}, rng);
      for (const auto &e : set.events) CHECK(std::abs(incidence_residual_minimal(truth, e.f_prime, e.t_prime)) < 1e-9);
    }
  }
  CHECK(sampling_from_string("spatiotemporal") == SamplingStrategy::kSpatiotemporal);
  CHECK_THROWS_AS(sampling_from_string("stratified"), Error);
}

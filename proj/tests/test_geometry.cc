#include <cmath>

#include <Eigen/Geometry>

#include "doctest.h"
#include "fixtures.h"

#include "eventail/errors.h"
#include "eventail/geometry.h"
#include "eventail/model.h"

using namespace eventail;

TEST_CASE("pinhole projection and backprojection") {
  const CameraModel cam;
  CHECK(project(cam, {0.0, 0.0, 1.0}).isApprox(Eigen::Vector2d(320.0, 240.0)));
  CHECK(project(cam, {1.0, 0.0, 1.0}).isApprox(Eigen::Vector2d(640.0, 240.0)));
  CHECK(backproject(cam, 320.0, 240.0).isApprox(Eigen::Vector3d::UnitZ()));
  CHECK((backproject(cam, 640.0, 240.0) - Eigen::Vector3d(1.0, 0.0, 1.0) / std::sqrt(2.0)).norm() < 1e-15);
  CHECK_THROWS_AS(project(cam, {0.0, 0.0, -1.0}), Error);

  Rng rng(3);
  std::uniform_real_distribution<double> pu(-200.0, 900.0), depth(0.1, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double u = pu(rng), v = pu(rng);
    const Eigen::Vector3d f = backproject(cam, u, v);
    CHECK(std::abs(f.norm() - 1.0) < 1e-15);
    CHECK(f.z() > 0.0);
    const Eigen::Vector2d back = project(cam, depth(rng) * f);
    CHECK(std::abs(back.x() - u) < 1e-9);
    CHECK(std::abs(back.y() - v) < 1e-9);
  }
}

TEST_CASE("camera validation") {
  CameraModel cam;
  CHECK_NOTHROW(cam.validate());
  cam.fx = 0.0;
  CHECK_THROWS_AS(cam.validate(), Error);
}

TEST_CASE("rotation_at matches the quaternion exponential") {
  CHECK(rotation_at(Eigen::Vector3d::Zero(), 3.0).isApprox(Eigen::Matrix3d::Identity()));
  const Eigen::Vector3d x = rotation_at({0.0, 0.0, M_PI}, 1.0) * Eigen::Vector3d::UnitX();
  CHECK((x - Eigen::Vector3d(-1.0, 0.0, 0.0)).norm() < 1e-15);

  Rng rng(11);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d w(g(rng), g(rng), g(rng));
    const double dt = i % 50 == 0 ? 1e-11 : g(rng);
    const Eigen::Matrix3d r = rotation_at(w, dt);
    const double angle = (w * dt).norm();
    const Eigen::Matrix3d oracle =
        angle > 0.0 ? Eigen::Quaterniond(Eigen::AngleAxisd(angle, (w * dt) / angle)).toRotationMatrix()
                    : Eigen::Matrix3d::Identity();
    CHECK((r - oracle).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(r.determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("camera center under constant velocity") {
  CHECK(camera_center_at({1.0, 0.0, 0.0}, 0.5).isApprox(Eigen::Vector3d(0.5, 0.0, 0.0)));
  CHECK(camera_center_at({0.4, 0.4, 2.0}, 0.0).isZero());
  CHECK((camera_center_at({0.4, 0.4, 2.0}, 0.1) - Eigen::Vector3d(0.04, 0.04, 0.2)).norm() < 1e-15);
}

TEST_CASE("reciprocal product and Plucker lines") {
  const PluckerLine x_axis{{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  const PluckerLine y_axis{{0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}};
  const PluckerLine offset{{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}};
  CHECK(reciprocal_product(x_axis, x_axis) == 0.0);
  CHECK(reciprocal_product(x_axis, y_axis) == 0.0);
  CHECK(reciprocal_product(x_axis, offset) == doctest::Approx(1.0));

  const PluckerLine l = plucker_from_two_points({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
  CHECK(l.d.isApprox(Eigen::Vector3d::UnitX()));
  CHECK(l.m.isZero());
  CHECK_THROWS_AS(plucker_from_two_points({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), Error);

  Rng rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    const PluckerLine p = plucker_from_two_points(a, b);
    CHECK(std::abs(p.d.dot(p.m)) < 1e-12 * p.d.norm() * p.m.norm() + 1e-14);
    // a ray through a point of the line meets it
    const Eigen::Vector3d on = a + 0.3 * (b - a);
    const Eigen::Vector3d c(u(rng), u(rng), u(rng));
    const PluckerLine ray = plucker_from_two_points(c, on);
    CHECK(std::abs(reciprocal_product(p, ray)) < 1e-10);
  }
}

TEST_CASE("two-point form round trip") {
  const PluckerLine l = plucker_from_two_points({-1.0, 0.5, 2.0}, {1.0, -0.3, 4.0});
  const TwoPointLine t = two_point_from_plucker(l);
  CHECK(t.y_a == doctest::Approx(0.5));
  CHECK(t.z_a == doctest::Approx(2.0));
  CHECK(t.y_b == doctest::Approx(-0.3));
  CHECK(t.z_b == doctest::Approx(4.0));
  CHECK_THROWS_AS(two_point_from_plucker({{0.0, 1.0, 0.0}, {1.0, 0.0, 0.0}}), Error);
}

TEST_CASE("line frame") {
  const LineFrame f = line_frame({0.0, 1.0, 0.0, 1.0});
  CHECK(f.e1.isApprox(Eigen::Vector3d(2.0, 0.0, 0.0)));
  CHECK(f.e2.isApprox(Eigen::Vector3d(0.0, -2.0, 0.0)));
  CHECK(f.e3.isApprox(Eigen::Vector3d(0.0, 0.0, -4.0)));
  CHECK_THROWS_AS(line_frame({0.0, 0.0, 0.0, 0.0}), Error);

  Rng rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const TwoPointLine l{u(rng), u(rng), u(rng), u(rng)};
    const LineFrame g = line_frame(l);
    const double s = g.e1.norm() * g.e2.norm() * g.e3.norm();
    CHECK(std::abs(g.e1.dot(g.e2)) < 1e-12 * s);
    CHECK(std::abs(g.e1.dot(g.e3)) < 1e-12 * s);
    CHECK(std::abs(g.e2.dot(g.e3)) < 1e-12 * s);
  }
}

TEST_CASE("scaled lines keep e1 and scale e2, e3") {
  Rng rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const TwoPointLine l{u(rng), u(rng) + 4.0, u(rng), u(rng) + 4.0};
    const LineFrame f = line_frame(l);
    for (double k : {0.5, 2.0, 10.0}) {
      const LineFrame g = line_frame(scale_line(l, k));
      CHECK((g.e1 - f.e1).norm() < 1e-12 * f.e1.norm());
      CHECK((g.e2 - k * f.e2).norm() < 1e-12 * k * f.e2.norm());
      CHECK((g.e3 - k * f.e3).norm() < 1e-12 * k * f.e3.norm());
    }
  }
}

TEST_CASE("incidence residuals") {
  Rng rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    EventailModel m;
    m.line = {u(rng), u(rng) + 3.0, u(rng), u(rng) + 3.0};
    m.v_y = u(rng);
    m.v_z = u(rng);
    const Eigen::Vector3d f = Eigen::Vector3d(u(rng), u(rng), 1.0).normalized();
    const double t = u(rng);
    const LineFrame fr = line_frame(m.line);
    const double nonminimal = incidence_residual_nonminimal(plucker_from_two_points(m.line.point_a(), m.line.point_b()),
                                                            fr.e2 * m.v_y + fr.e3 * m.v_z, f, t);
    const double minimal = incidence_residual_minimal(m, f, t);
    CHECK(std::abs(minimal - nonminimal) <= 1e-12 * std::max(1.0, std::abs(minimal)));
  }

  // exact events vanish; a perturbed bearing does not
  for (int i = 0; i < 100; ++i) {
    const fixtures::Scene s = fixtures::random_scene(rng);
    const PluckerLine line = plucker_from_two_points(s.a, s.b);
    const auto events = fixtures::exact_events(s, 20, rng);
    const EventailModel model = model_from_line_and_velocity(line, s.v, Eigen::Matrix3d::Identity());
    for (const auto &e : events) {
      CHECK(std::abs(incidence_residual_nonminimal(line, s.v, e.f_prime, e.t_prime)) < 1e-12 * line.d.norm());
      CHECK(std::abs(incidence_residual_minimal(model, e.f_prime, e.t_prime)) < 1e-12);
      CHECK(angular_line_error(model, e.f_prime, e.t_prime) < 1e-10);
      const Eigen::Vector3d off = (Eigen::AngleAxisd(1e-3, line.d.normalized()) * e.f_prime);
      CHECK(std::abs(incidence_residual_nonminimal(line, s.v, off, e.t_prime)) > 0.0);
    }
  }
}

TEST_CASE("angular line error") {
  EventailModel m;
  m.line = {0.0, 2.0, 0.0, 2.0};  // x-parallel line at y = 0, z = 2
  m.v_y = 0.0;
  m.v_z = 0.0;
  // plane through the origin and the line is y = 0
  CHECK(angular_line_error(m, Eigen::Vector3d::UnitY(), 0.0) == doctest::Approx(M_PI_2));
  CHECK(angular_line_error(m, Eigen::Vector3d(0.0, 0.0, 1.0), 0.0) < 1e-15);
  double previous = -1.0;
  for (double angle = 0.0; angle < 1.5; angle += 0.1) {
    const double e = angular_line_error(m, Eigen::Vector3d(0.0, std::sin(angle), std::cos(angle)), 0.0);
    CHECK(e > previous);
    CHECK(e == doctest::Approx(angle).epsilon(1e-12));
    previous = e;
  }
  EventailModel through;
  through.line = {0.0, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(angular_line_error(through, Eigen::Vector3d::UnitZ(), 0.0), Error);
}

TEST_CASE("dual model") {
  Rng rng(41);
  for (int i = 0; i < 100; ++i) {
    const fixtures::Scene s = fixtures::random_scene(rng);
    const EventailModel m =
        model_from_line_and_velocity(plucker_from_two_points(s.a, s.b), s.v, Eigen::Matrix3d::Identity());
    const EventailModel d = dual_model(m);
    const EventailModel dd = dual_model(d);
    CHECK(dd.line.as_vector() == m.line.as_vector());
    CHECK(d.v_y == m.v_y);
    CHECK(d.v_z == m.v_z);
    CHECK((working_velocity(d) + working_velocity(m)).norm() < 1e-12);
    for (const auto &e : fixtures::exact_events(s, 10, rng)) {
      const double r = incidence_residual_minimal(m, e.f_prime, e.t_prime);
      const double rd = incidence_residual_minimal(d, e.f_prime, e.t_prime);
      CHECK(std::abs(std::abs(r) - std::abs(rd)) < 1e-12);
      CHECK(std::abs(rd) < 1e-12);
    }
    // arbitrary bearings too
    const Eigen::Vector3d f = Eigen::Vector3d(0.1, -0.2, 1.0).normalized();
    CHECK(std::abs(std::abs(incidence_residual_minimal(m, f, 0.1)) - std::abs(incidence_residual_minimal(d, f, 0.1))) <
          1e-12);
  }
}

TEST_CASE("model construction round trips through camera coordinates") {
  Rng rng(51);
  for (int i = 0; i < 200; ++i) {
    const fixtures::Scene s = fixtures::random_scene(rng);
    const PluckerLine line = plucker_from_two_points(s.a, s.b);
    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.4, Eigen::Vector3d(1.0, 2.0, 0.5).normalized()).toRotationMatrix();
    const EventailModel m = model_from_line_and_velocity(line, s.v, r);
    CHECK(std::abs(scale_constraint_residual(m)) < 1e-12);
    CHECK(m.kappa == 0.0);
    const PluckerLine back = camera_line(m);
    CHECK(back.d.normalized().cross(line.d.normalized()).norm() < 1e-12);
    // velocity is the component of s.v orthogonal to the line, up to the line scale
    const Eigen::Vector3d dir = line.d.normalized();
    const Eigen::Vector3d perp = s.v - s.v.dot(dir) * dir;
    CHECK(camera_velocity(m).normalized().cross(perp.normalized()).norm() < 1e-12);
    const EventailModel other = reexpress(m, Eigen::Matrix3d::Identity());
    for (const auto &e : fixtures::exact_events(s, 5, rng)) {
      CHECK(angular_line_error(other, e.f_prime, e.t_prime) < 1e-10);
    }
    const ModelScorer scorer(m);
    const Eigen::Vector3d f = Eigen::Vector3d(0.2, 0.1, 1.0).normalized();
    CHECK(scorer.error(f, 0.07) == doctest::Approx(angular_line_error(m, f, 0.07)).epsilon(1e-10));
  }
}

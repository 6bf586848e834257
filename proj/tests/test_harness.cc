#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "eventail/errors.h"
#include "eventail/harness.h"

using namespace eventail;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("direction error") {
  const Eigen::Vector3d v(0.3, -0.2, 0.9);
  CHECK(direction_error(v, v) == 0.0);
  CHECK(direction_error(3.0 * v, v) == doctest::Approx(0.0));
  CHECK(direction_error(Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()) == doctest::Approx(M_PI_2));
  CHECK(direction_error(-v, v) == doctest::Approx(M_PI));
  const Eigen::Vector3d w(-0.1, 0.7, 0.2);
  CHECK(direction_error(v, w) == direction_error(w, v));
  CHECK(direction_error(v, w) == doctest::Approx(direction_error(2.5 * v, 0.1 * w)).epsilon(1e-14));
  // small angles keep their precision
  CHECK(direction_error(Eigen::Vector3d(1.0, 1e-9, 0.0), Eigen::Vector3d::UnitX()) ==
        doctest::Approx(1e-9).epsilon(1e-6));
  CHECK_THROWS_AS(direction_error(Eigen::Vector3d::Zero(), v), Error);
}

TEST_CASE("partial direction error") {
  const TwoPointLine line{0.0, 3.0, 0.0, 3.0};  // x-parallel line
  PartialObservation obs{line_frame(line), 0.5, 0.0};
  const Eigen::Vector3d observed = obs.frame.e2 * obs.v_y;
  // the component along the line is ignored
  CHECK(partial_direction_error(obs, observed + 7.0 * Eigen::Vector3d::UnitX()) < 1e-12);
  CHECK(partial_direction_error(obs, obs.frame.e3) == doctest::Approx(M_PI_2));
  try {
    partial_direction_error(obs, Eigen::Vector3d::UnitX());
    FAIL("expected kUnobservable");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kUnobservable);
  }
}

TEST_CASE("success rate") {
  const double threshold = 0.7;
  std::vector<DirectionErrorReport> reports{make_report(true, 0.1, threshold), make_report(true, 0.2, threshold)};
  CHECK(success_rate(reports, threshold) == 100.0);
  reports.push_back(make_report(true, 0.9, threshold));
  reports.push_back(make_report(false, 0.0, threshold));
  CHECK(success_rate(reports, threshold) == 50.0);
  CHECK_FALSE(reports[3].success);
  const std::vector<DirectionErrorReport> invalid(3, make_report(false, 0.0, threshold));
  CHECK(success_rate(invalid, threshold) == 0.0);
  CHECK_THROWS_AS(success_rate(std::vector<DirectionErrorReport>{}, threshold), Error);
  CHECK_THROWS_AS(success_rate(reports, 0.0), Error);
}

TEST_CASE("quartiles") {
  const Quartiles q = quartiles({4.0, 1.0, 3.0, 2.0, 5.0});
  CHECK(q.q1 == 2.0);
  CHECK(q.median == 3.0);
  CHECK(q.q3 == 4.0);
  CHECK(q.mean == 3.0);
  const Quartiles even = quartiles({1.0, 2.0, 3.0, 4.0});
  CHECK(even.median == 2.5);
  CHECK(even.q1 <= even.median);
  CHECK(even.median <= even.q3);
  CHECK(std::isnan(quartiles({}).median));
}

TEST_CASE("noise sweep shape and exactness") {
  NoiseSweepConfig cfg;
  cfg.configurations = 3;
  cfg.evaluations = 10;
  const SweepTable table = run_noise_sweep(cfg);
  CHECK(table.rows.size() == 3 * 4 * 4);
  for (const auto &r : table.rows) {
    CHECK(r.q1 <= r.median);
    CHECK(r.median <= r.q3);
    if (r.level == 0.0) CHECK(r.max < 1e-6);
  }

  const fs::path dir = fs::temp_directory_path() / "eventail_test_harness";
  fs::create_directories(dir);
  write_csv(dir / "a.csv", table);
  write_csv(dir / "b.csv", run_noise_sweep(cfg));
  const std::string a = slurp(dir / "a.csv");
  CHECK(a == slurp(dir / "b.csv"));
  CHECK(a.rfind("kind,level,variant,q1,median,q3,mean,max,samples,failures\n", 0) == 0);

  cfg.evaluations = 0;
  CHECK_THROWS_AS(run_noise_sweep(cfg), Error);
}

TEST_CASE("constant velocity control is exact") {
  MotionViolationConfig cfg;
  cfg.radii.clear();
  cfg.accelerations = {0.5};
  cfg.seeds = 2;
  const SweepTable table = run_motion_violation(cfg);
  REQUIRE(table.rows.size() == 4);
  CHECK(table.rows[0].kind == "control");
  CHECK(table.rows[0].variant == "clean");
  CHECK(table.rows[0].failures == 0);
  CHECK(table.rows[0].max < 1e-6);
  CHECK(table.rows[2].kind == "acceleration");
  CHECK(table.rows[2].mean > table.rows[0].mean);
}

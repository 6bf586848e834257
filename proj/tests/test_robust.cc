#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.h"

#include "eventail/errors.h"
#include "eventail/robust.h"

using namespace eventail;

namespace {

// Exact events of several lines seen by the same moving camera, labeled by line.
EventSet labeled_scene(const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> &lines,
                       const Eigen::Vector3d &v, int per_line, Rng &rng) {
  EventSet set;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const fixtures::Scene s{lines[l].first, lines[l].second, v};
    for (const auto &e : fixtures::exact_events(s, per_line, rng, 0.15)) {
      set.events.push_back(e);
      set.labels.push_back(static_cast<int>(l));
    }
  }
  return set;
}

EventSet uniform_events(int n, Rng &rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  EventSet set;
  for (int i = 0; i < n; ++i) set.events.push_back({Eigen::Vector3d(u(rng), u(rng), 1.0).normalized(), u(rng)});
  return set;
}

}  // namespace

TEST_CASE("sampling strategies") {
  Rng rng(3);
  const EventSet set = uniform_events(1000, rng);
  std::vector<double> times;
  for (const auto &e : set.events) times.push_back(e.t_prime);
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  const double width = (*hi - *lo) / 5.0;

  for (auto strategy : {SamplingStrategy::kRandom, SamplingStrategy::kTemporal, SamplingStrategy::kSpatial,
                        SamplingStrategy::kSpatiotemporal}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto five = sample_five(set, strategy, rng);
      CHECK(std::set<std::size_t>(five.begin(), five.end()).size() == 5);
      for (std::size_t i : five) CHECK(i < set.size());
      if (strategy == SamplingStrategy::kTemporal) {
        // one draw per temporal fifth, in order
        for (std::size_t b = 0; b < 5; ++b) {
          const double t = set[five[b]].t_prime;
          CHECK(t >= *lo + b * width - 1e-12);
          CHECK(t <= *lo + (b + 1) * width + 1e-12);
        }
      }
    }
  }

  Rng a(5), b(5);
  CHECK(sample_five(set, SamplingStrategy::kSpatiotemporal, a) == sample_five(set, SamplingStrategy::kSpatiotemporal, b));

  EventSet four;
  four.events.resize(4);
  CHECK_THROWS_AS(sample_five(four, SamplingStrategy::kRandom, rng), Error);
}

TEST_CASE("noise-free single line is fully explained") {
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const fixtures::Scene s = fixtures::random_scene(rng);
    EventSet set;
    for (const auto &e : fixtures::exact_events(s, 400, rng)) set.events.push_back(e);
    RansacConfig cfg;
    cfg.seed = i;
    const auto cluster = ransac_eventail(set, cfg);
    REQUIRE(cluster.has_value());
    CHECK(cluster->inlier_ratio == 1.0);
    CHECK(cluster->inlier_indices.size() == set.size());
    CHECK(cluster->mean_error < 1e-8);
  }
}

TEST_CASE("two lines give two disjoint clusters") {
  Rng rng(9);
  const Eigen::Vector3d v = Eigen::Vector3d(0.6, 0.3, 0.5).normalized();
  const EventSet set = labeled_scene({{{-1.0, -0.8, 3.0}, {-0.6, 0.9, 3.4}}, {{0.5, -0.5, 2.5}, {1.2, 0.7, 4.0}}}, v, 500,
                                     rng);
  RansacConfig cfg;
  cfg.seed = 21;
  const auto clusters = sequential_extract(set, cfg, 5);
  REQUIRE(clusters.size() == 2);
  std::set<std::size_t> seen;
  for (const auto &c : clusters) {
    CHECK(std::is_sorted(c.inlier_indices.begin(), c.inlier_indices.end()));
    const int label = set.labels[c.inlier_indices.front()];
    for (std::size_t i : c.inlier_indices) {
      CHECK(set.labels[i] == label);
      CHECK(seen.insert(i).second);
      CHECK(angular_line_error(c.model, set[i].f_prime, set[i].t_prime) <= cfg.inlier_threshold);
    }
    CHECK(c.inlier_indices.size() == 500);
  }
  CHECK(clusters[0].inlier_ratio == doctest::Approx(0.5));
  CHECK(clusters[1].inlier_ratio == 1.0);

  CHECK(sequential_extract(set, cfg, 1).size() == 1);
  CHECK(sequential_extract(EventSet{}, cfg, 5).empty());

  // parallel hypothesis evaluation does not change the answer
  RansacConfig parallel = cfg;
  parallel.jobs = 4;
  const auto again = sequential_extract(set, parallel, 5);
  REQUIRE(again.size() == clusters.size());
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    CHECK(again[k].inlier_indices == clusters[k].inlier_indices);
    CHECK(again[k].model.line.as_vector() == clusters[k].model.line.as_vector());
  }
}

TEST_CASE("max_models caps extraction") {
  Rng rng(13);
  const Eigen::Vector3d v = Eigen::Vector3d(-0.2, 0.9, 0.3).normalized();
  std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>> lines;
  for (int l = 0; l < 4; ++l) {
    const double x = -1.5 + l;
    lines.push_back({{x, -1.0, 3.0 + 0.3 * l}, {x + 0.4, 1.0, 3.5}});
  }
  const EventSet set = labeled_scene(lines, v, 300, rng);
  RansacConfig cfg;
  cfg.seed = 4;
  // interleaved lines: draw half of the samples locally, as the window pipeline does
  cfg.neighborhood_radius = 0.2;
  CHECK(sequential_extract(set, cfg, 2).size() == 2);
  CHECK(sequential_extract(set, cfg, 4).size() == 4);
  CHECK(sequential_extract(set, cfg, 10).size() == 4);
}

TEST_CASE("ransac config validation") {
  RansacConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.inlier_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.max_iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.confidence = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.refine_rounds = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);

  Rng rng(1);
  const EventSet few = uniform_events(4, rng);
  CHECK_THROWS_AS(ransac_eventail(few, RansacConfig{}), Error);
  // a pure noise cloud does not reach min_inliers
  const EventSet cloud = uniform_events(300, rng);
  RansacConfig strict;
  strict.min_inliers = 200;
  CHECK_FALSE(ransac_eventail(cloud, strict).has_value());
}

TEST_CASE("plane baseline") {
  Rng rng(17);
  // a fronto-parallel line under fronto-parallel motion sweeps a plane in (x, y, t)
  const fixtures::Scene s{{-0.8, -0.6, 3.0}, {0.7, 0.9, 3.0}, {0.8, -0.6, 0.0}};
  EventSet set;
  for (const auto &e : fixtures::exact_events(s, 1000, rng, 0.15)) set.events.push_back(e);
  PlaneBaselineConfig cfg;
  const auto planes = plane_ransac_baseline(set, cfg);
  REQUIRE_FALSE(planes.empty());
  CHECK(planes[0].inlier_ratio >= 0.99);

  EventSet two;
  two.events.resize(2);
  CHECK_THROWS_AS(plane_ransac_baseline(two, cfg), Error);
}

#include "eventail/robust.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "eventail/errors.h"
#include "eventail/parallel.h"
#include "eventail/solver.h"

namespace eventail {

void RansacConfig::validate() const {
  if (!(inlier_threshold > 0.0)) throw Error(ErrorKind::kValidation, "inlier_threshold must be > 0");
  if (max_iterations < 1) throw Error(ErrorKind::kValidation, "max_iterations must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error(ErrorKind::kValidation, "confidence must be in (0, 1)");
  if (min_inliers < 0) throw Error(ErrorKind::kValidation, "min_inliers must be >= 0");
  if (neighborhood_radius < 0.0) throw Error(ErrorKind::kValidation, "neighborhood_radius must be >= 0");
  if (!(suppression_factor >= 1.0)) throw Error(ErrorKind::kValidation, "suppression_factor must be >= 1");
  if (refine_rounds < 0) throw Error(ErrorKind::kValidation, "refine_rounds must be >= 0");
}

namespace {

Eigen::Vector2d image_coords(const BearingEvent &e) { return e.f_prime.head<2>() / e.f_prime.z(); }

std::vector<std::size_t> ranks_of(const std::vector<double> &values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> rank(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

void equal_width_bins(const std::vector<double> &values, const std::vector<std::size_t> &indices,
                      std::array<std::vector<std::size_t>, 5> &bins) {
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  for (std::size_t i = 0; i < values.size(); ++i) {
    int b = span > 0.0 ? static_cast<int>(std::floor(5.0 * (values[i] - lo) / span)) : 0;
    b = std::clamp(b, 0, 4);
    bins[static_cast<std::size_t>(b)].push_back(indices[i]);
  }
}

}  // namespace

SamplingPool::SamplingPool(const EventSet &events, std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  const std::size_t n = indices_.size();
  if (n == 0) return;
  std::vector<double> times(n), proj(n);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = events[indices_[i]].t_prime;
    xy[i] = image_coords(events[indices_[i]]);
    mean += xy[i];
  }
  mean /= static_cast<double>(n);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto &p : xy) cov += (p - mean) * (p - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Vector2d axis = eig.eigenvectors().col(1);
  for (std::size_t i = 0; i < n; ++i) proj[i] = axis.dot(xy[i] - mean);

  equal_width_bins(times, indices_, bins_[0]);
  equal_width_bins(proj, indices_, bins_[1]);

  const auto rank_t = ranks_of(times);
  const auto rank_s = ranks_of(proj);
  std::vector<double> combined(n);
  for (std::size_t i = 0; i < n; ++i) combined[i] = static_cast<double>(rank_t[i] + rank_s[i]);
  const auto rank_c = ranks_of(combined);
  for (std::size_t i = 0; i < n; ++i) bins_[2][rank_c[i] * 5 / n].push_back(indices_[i]);
}

std::array<std::size_t, 5> SamplingPool::draw(SamplingStrategy strategy, Rng &rng) const {
  const std::size_t n = indices_.size();
  if (n < 5) throw Error(ErrorKind::kInsufficientData, "sampling needs at least five events");
  std::array<std::size_t, 5> out{};
  std::array<bool, 5> filled{};
  auto pick = [&](const std::vector<std::size_t> &from) {
    return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng)];
  };
  if (strategy != SamplingStrategy::kRandom) {
    const auto &bins = bins_[strategy == SamplingStrategy::kTemporal ? 0 : strategy == SamplingStrategy::kSpatial ? 1 : 2];
    for (std::size_t b = 0; b < 5; ++b) {
      if (bins[b].empty()) continue;
      out[b] = pick(bins[b]);
      filled[b] = true;
    }
  }
  for (std::size_t b = 0; b < 5; ++b) {
    if (filled[b]) continue;
    for (;;) {
      const std::size_t candidate = pick(indices_);
      bool taken = false;
      for (std::size_t k = 0; k < 5; ++k) taken = taken || (filled[k] && out[k] == candidate);
      if (taken) continue;
      out[b] = candidate;
      filled[b] = true;
      break;
    }
  }
  return out;
}

std::array<std::size_t, 5> sample_five(const EventSet &events, SamplingStrategy strategy, Rng &rng) {
  if (events.size() < 5) throw Error(ErrorKind::kInsufficientData, "sample_five: fewer than five events");
  std::vector<std::size_t> all(events.size());
  std::iota(all.begin(), all.end(), 0);
  return SamplingPool(events, std::move(all)).draw(strategy, rng);
}

namespace {

struct Hypothesis {
  bool valid = false;
  EventailModel model;
  int count = 0;
  double error_sum = 0.0;
};

bool better(const Hypothesis &a, const Hypothesis &b) {
  if (!a.valid) return false;
  if (!b.valid) return true;
  if (a.count != b.count) return a.count > b.count;
  return a.error_sum * b.count < b.error_sum * a.count;
}

class Ransac {
 public:
  Ransac(const EventSet &events, std::span<const std::size_t> candidates, const RansacConfig &cfg)
      : events_(events),
        candidates_(candidates.begin(), candidates.end()),
        cfg_(cfg),
        global_(events, candidates_) {
    double half_span = 0.0;
    for (std::size_t i : candidates_) half_span = std::max(half_span, std::abs(events[i].t_prime));
    time_scale_ = half_span > 0.0 ? 1.0 / half_span : 1.0;
    if (cfg.neighborhood_radius > 0.0) {
      coords_.reserve(candidates_.size());
      for (std::size_t i : candidates_) {
        const Eigen::Vector2d xy = image_coords(events[i]);
        coords_.emplace_back(xy.x(), xy.y(), events[i].t_prime * time_scale_);
      }
    }
  }

  Hypothesis run_iteration(int iteration, int bail_count) const {
    Rng rng = make_rng(cfg_.seed, static_cast<std::uint64_t>(iteration));
    SamplingStrategy strategy = cfg_.sampling;
    if (strategy == SamplingStrategy::kSpatiotemporal && iteration % 2 == 0) strategy = SamplingStrategy::kSpatial;
    const bool local = cfg_.neighborhood_radius > 0.0 && (iteration / 2) % 2 == 1;

    std::array<std::size_t, 5> picks;
    if (local) {
      const std::size_t seed =
          std::uniform_int_distribution<std::size_t>(0, candidates_.size() - 1)(rng);
      const double r2 = cfg_.neighborhood_radius * cfg_.neighborhood_radius;
      std::vector<std::size_t> near;
      for (std::size_t k = 0; k < candidates_.size(); ++k) {
        if ((coords_[k] - coords_[seed]).squaredNorm() <= r2) near.push_back(candidates_[k]);
      }
      picks = near.size() >= 5 ? SamplingPool(events_, std::move(near)).draw(strategy, rng)
                               : global_.draw(strategy, rng);
    } else {
      picks = global_.draw(strategy, rng);
    }

    std::array<BearingEvent, 5> sample;
    for (std::size_t k = 0; k < 5; ++k) sample[k] = events_[picks[k]];
    Hypothesis h;
    MinimalSolution sol;
    try {
      sol = solve_minimal(sample);
    } catch (const Error &) {
      return h;
    }
    if (sol.models.empty()) return h;
    h.model = sol.models.front();
    const ModelScorer scorer(h.model);
    const auto n = static_cast<int>(candidates_.size());
    for (int k = 0; k < n; ++k) {
      const BearingEvent &e = events_[candidates_[static_cast<std::size_t>(k)]];
      const double err = scorer.error(e.f_prime, e.t_prime);
      if (err < cfg_.inlier_threshold) {
        ++h.count;
        h.error_sum += err;
      }
      if (h.count + (n - k - 1) < bail_count) return Hypothesis{};
    }
    h.valid = true;
    return h;
  }

  Hypothesis score(const EventailModel &model) const {
    Hypothesis h;
    h.model = model;
    const ModelScorer scorer(model);
    for (std::size_t i : candidates_) {
      const double err = scorer.error(events_[i].f_prime, events_[i].t_prime);
      if (err < cfg_.inlier_threshold) {
        ++h.count;
        h.error_sum += err;
      }
    }
    h.valid = true;
    return h;
  }

  void local_optimize(Hypothesis &best) const {
    for (int round = 0; round < cfg_.refine_rounds; ++round) {
      std::vector<BearingEvent> inliers;
      const ModelScorer scorer(best.model);
      for (std::size_t i : candidates_) {
        if (scorer.error(events_[i].f_prime, events_[i].t_prime) < cfg_.inlier_threshold) {
          inliers.push_back(events_[i]);
        }
      }
      if (inliers.size() < 5) return;
      std::optional<EventailModel> refit;
      try {
        refit = refine_model(inliers, best.model, 3, cfg_.inlier_threshold);
      } catch (const Error &) {
        return;
      }
      if (!refit) return;
      Hypothesis h = score(*refit);
      if (!better(h, best)) return;
      best = std::move(h);
    }
  }

  std::optional<ClusterResult> run() const {
    constexpr int kBatch = 32;
    Hypothesis best;
    const auto n = static_cast<double>(candidates_.size());
    for (int start = 0; start < cfg_.max_iterations; start += kBatch) {
      const int m = std::min(kBatch, cfg_.max_iterations - start);
      std::vector<Hypothesis> batch(static_cast<std::size_t>(m));
      const int bail = best.valid ? best.count : 0;
      parallel_for(batch.size(), cfg_.jobs, [&](std::size_t k) {
        batch[k] = run_iteration(start + static_cast<int>(k), bail);
      });
      bool improved = false;
      for (const auto &h : batch) {
        if (better(h, best)) {
          best = h;
          improved = true;
        }
      }
      if (improved) local_optimize(best);
      if (cfg_.adaptive && best.valid && best.count > 0) {
        const double w = best.count / n;
        const double miss = 1.0 - std::pow(w, 5);
        if (miss <= 0.0) break;
        const double needed = std::log(1.0 - cfg_.confidence) / std::log(miss);
        if (static_cast<double>(start + m) >= needed) break;
      }
    }
    if (!best.valid) return std::nullopt;

    ClusterResult result;
    result.model = best.model;
    double error_sum = 0.0;
    for (std::size_t i : candidates_) {
      double err;
      try {
        err = angular_line_error(best.model, events_[i].f_prime, events_[i].t_prime);
      } catch (const Error &) {
        continue;
      }
      if (err < cfg_.inlier_threshold) {
        result.inlier_indices.push_back(i);
        error_sum += err;
      }
    }
    if (result.inlier_indices.empty() || static_cast<int>(result.inlier_indices.size()) < cfg_.min_inliers) {
      return std::nullopt;
    }
    std::sort(result.inlier_indices.begin(), result.inlier_indices.end());
    result.inlier_ratio = static_cast<double>(result.inlier_indices.size()) / n;
    result.mean_error = error_sum / static_cast<double>(result.inlier_indices.size());
    return result;
  }

 private:
  const EventSet &events_;
  std::vector<std::size_t> candidates_;
  RansacConfig cfg_;
  SamplingPool global_;
  double time_scale_ = 1.0;
  std::vector<Eigen::Vector3d> coords_;
};

}  // namespace

std::optional<ClusterResult> ransac_eventail(const EventSet &events, std::span<const std::size_t> candidates,
                                             const RansacConfig &cfg) {
  cfg.validate();
  if (candidates.size() < 5) throw Error(ErrorKind::kInsufficientData, "ransac_eventail: fewer than five events");
  return Ransac(events, candidates, cfg).run();
}

std::optional<ClusterResult> ransac_eventail(const EventSet &events, const RansacConfig &cfg) {
  std::vector<std::size_t> all(events.size());
  std::iota(all.begin(), all.end(), 0);
  return ransac_eventail(events, all, cfg);
}

std::vector<ClusterResult> sequential_extract(const EventSet &events, const RansacConfig &cfg, int max_models) {
  cfg.validate();
  if (max_models < 1) throw Error(ErrorKind::kValidation, "max_models must be >= 1");
  std::vector<ClusterResult> clusters;
  std::vector<std::size_t> working(events.size());
  std::iota(working.begin(), working.end(), 0);
  for (int k = 0; k < max_models; ++k) {
    if (working.size() < 5 || static_cast<int>(working.size()) < cfg.min_inliers) break;
    RansacConfig round = cfg;
    round.seed = stream_seed(cfg.seed, 0xe0 + static_cast<std::uint64_t>(k));
    auto found = ransac_eventail(events, working, round);
    if (!found) break;
    std::vector<std::size_t> rest;
    std::set_difference(working.begin(), working.end(), found->inlier_indices.begin(), found->inlier_indices.end(),
                        std::back_inserter(rest));
    if (cfg.suppression_factor > 1.0) {
      const double band = cfg.suppression_factor * cfg.inlier_threshold;
      const ModelScorer scorer(found->model);
      std::erase_if(rest, [&](std::size_t i) { return scorer.error(events[i].f_prime, events[i].t_prime) < band; });
    }
    working = std::move(rest);
    clusters.push_back(std::move(*found));
  }
  return clusters;
}

}  // namespace eventail

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "eventail/events.h"
#include "eventail/model.h"

namespace eventail {

struct SolverDiagnostics {
  double residual_max = 0.0;
  double condition_estimate = 0.0;
  int n_solutions = 0;
};

struct MinimalSolution {
  std::vector<EventailModel> models;  // 0 or 2; preferred (cheirality) model first
  SolverDiagnostics diagnostics;
};

/// Samples whose 5x6 incidence matrix is worse conditioned than this yield no solution.
inline constexpr double kMaxConditionEstimate = 1e12;

/// Working frame (returned as working -> camera) whose z-axis is the mean
/// bearing and whose x-axis follows the two most separated bearings, i.e. the
/// approximate image direction of the line. Throws kDegenerate if all bearings coincide.
Eigen::Matrix3d precondition_frame(std::span<const BearingEvent> events);

/// Five-event minimal solver.
///
/// With m the line moment and w = d x v, every incidence constraint reads
/// f'.m + t' f'.w = 0, so five events pin (m, w) down to the 1-D nullspace of a
/// 5x6 matrix. The line direction follows as d ~ m x w and the observable
/// velocity as -(d x w) / |d|^2. The remaining common scale of line and
/// velocity is fixed by the unit-velocity constraint, whose two roots +-k are
/// the dual pair. The working frame is re-aligned with the recovered line's
/// image direction before converting to two-point form.
MinimalSolution solve_minimal(std::span<const BearingEvent> events);

struct PartialVelocity {
  double v_y = 0.0;
  double v_z = 0.0;
};

/// Least-squares (v_y, v_z) for a known line; events are camera-frame bearings.
/// The result is invariant to the line's scale; pair with normalize_scale() to
/// meet the unit-velocity constraint. Throws kUnobservable if the system is rank deficient.
PartialVelocity recover_velocity_given_line(const TwoPointLine &line, std::span<const BearingEvent> events,
                                            const Eigen::Matrix3d &working_to_camera = Eigen::Matrix3d::Identity());

/// Least-squares refit of a model to many events: the linear incidence system,
/// reweighted so each row approximates the angular error. The working frame of
/// `initial` is reused. A positive robust_scale (rad) adds Tukey weights on the
/// angular residual of the previous estimate. Returns nullopt if the events do
/// not pin down a line.
std::optional<EventailModel> refine_model(std::span<const BearingEvent> events, const EventailModel &initial,
                                          int iterations = 3, double robust_scale = 0.0);

/// Number of events whose ray meets the line at positive depth.
int count_positive_depth(const EventailModel &model, std::span<const BearingEvent> events);

struct OracleOptions {
  int ray_starts = 40;  // best line-through-two-rays seeds
  int starts = 200;     // uniform random seeds
  int max_iterations = 10000;
  double residual_tolerance = 1e-10;
  std::uint64_t seed = 0x5eed;
};

/// Independent reference: solves the 6x6 polynomial system (five incidence
/// equations plus the unit-velocity constraint) by damped Gauss-Newton and returns
/// the distinct converged roots. Starts come from lines drawn through pairs of
/// event rays at a grid of depth ratios, plus uniformly random parameters.
std::vector<EventailModel> oracle_solve(std::span<const BearingEvent> events, const OracleOptions &options = {});

/// True if two models describe the same camera-frame line and velocity.
bool same_solution(const EventailModel &a, const EventailModel &b, double tol);

}  // namespace eventail

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpct/controller.hpp"

namespace mpct {

struct TraceStep {
  int t = 0;
  Vector x, u, y, w;
  Vector xa, ua, ya;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  double objective = 0.0;
};

struct ClosedLoopTrace {
  std::string tag;
  std::uint64_t seed = 0;
  std::vector<TraceStep> steps;
  /// State after the last applied input.
  Vector x_final;
  /// First step whose program could not be solved; the run stops there.
  std::optional<int> infeasible_at;

  bool completed() const { return !infeasible_at.has_value(); }
};

class InfeasibleAtStepError : public MpctError {
 public:
  explicit InfeasibleAtStepError(int step)
      : MpctError("closed loop became infeasible at step " + std::to_string(step)), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Additive disturbance drawn uniformly from the parameter box of W.
struct DisturbanceModel {
  Zonotope W;
  std::uint64_t seed = 0;
};

/// Runs T steps of the receding-horizon loop from x0. An infeasible solve
/// stops the run and is recorded in `infeasible_at`.
ClosedLoopTrace run_closed_loop(const ControllerSpec& spec, const Vector& x0, const ReferenceSchedule& schedule,
                                int T, const std::optional<DisturbanceModel>& disturbance = std::nullopt);

/// Throws InfeasibleAtStepError when the trace stopped early.
void require_feasible(const ClosedLoopTrace& trace);

/// Runs one closed loop per seed on up to `threads` workers. Results are
/// ordered by seed index and do not depend on the thread count.
std::vector<ClosedLoopTrace> run_batch(const ControllerSpec& spec, const Vector& x0, const ReferenceSchedule& schedule,
                                       int T, const Zonotope& W, const std::vector<std::uint64_t>& seeds,
                                       int threads = 1);

/// Applies fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

/// Regular grid: lower + k * step in each dimension, up to upper.
struct GridSpec {
  Vector lower, upper;
  double step = 1.0;

  int points_along(int dim) const;
  int size() const;
  Vector point(int index) const;
};

struct DoAMap {
  std::string tag;
  GridSpec grid;
  std::vector<Vector> points;
  std::vector<bool> feasible;

  int feasible_count() const;
};

/// Feasibility of the controller's program at every grid point, with the
/// reference taken at t = 0. QPs are decided by an LP phase one, programs with
/// cones by ADMM in feasibility-only mode.
DoAMap doa_scan(const ControllerSpec& spec, const ReferenceSchedule& schedule, const GridSpec& grid,
                int threads = 1);

/// True when every point feasible in `inner` is feasible in `outer`.
bool doa_subset(const DoAMap& inner, const DoAMap& outer);

struct ConvergenceMetrics {
  /// First step from which the tracking error stays within tolerance, or -1.
  int settling_step = -1;
  double terminal_offset = 0.0;
  int violations = 0;
  double max_violation = 0.0;
  bool converged = false;
};

/// Point target: tracking error ||y(t) - target||_inf.
ConvergenceMetrics convergence_report(const ClosedLoopTrace& trace, const Vector& target, double tol,
                                      const Polytope* Z = nullptr);

/// Set target {target} + tube: tracking error is the distance to the set,
/// evaluated through support functions.
ConvergenceMetrics convergence_report(const ClosedLoopTrace& trace, const Vector& target, const Zonotope& tube,
                                      double tol, const Polytope* Z = nullptr);

/// Time-varying target (periodic references): error ||y(t) - target(t)||_inf.
ConvergenceMetrics convergence_report(const ClosedLoopTrace& trace, const std::function<Vector(int)>& target,
                                      double tol, const Polytope* Z = nullptr);

/// Euclidean distance from y to the zonotope, computed as the maximum of
/// q'y - h(q) over unit directions (exact for dimension 1, sampled beyond).
double distance_to_zonotope(const Vector& y, const Zonotope& set, int directions = 720);

void write_trace_csv(std::ostream& os, const ClosedLoopTrace& trace);
void write_doa_csv(std::ostream& os, const DoAMap& map);

}  // namespace mpct

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpct/design.hpp"
#include "mpct/formulations.hpp"
#include "mpct/oracles.hpp"
#include "mpct/solver.hpp"

namespace mpct {

enum class Formulation { Stan, LinMpct, EquMpct, RobustMpct, PeriodicMpct, Hmpc, EconMpct };

const char* to_string(Formulation f);
/// Accepts the names produced by to_string ("stan_mpc", "lin_mpct", ...).
Formulation formulation_from_string(const std::string& name);

struct RobustIngredients {
  Zonotope W;
  RpiApproximation phi;
  Polytope Zbar;
  Polytope Xt_bar;
};

/// Everything a controller of the family needs at run time.
///
/// The reference schedule is read per formulation: output setpoints for
/// STAN, LIN_MPCT, ROBUST_MPCT and PERIODIC_MPCT (a window of `period`
/// samples), output setpoints mapped to a steady-state target for EQU_MPCT
/// and HMPC, and the economic parameter theta for ECON_MPCT.
struct ControllerSpec {
  ControllerSpec(Formulation tag, LinearSystem sys, Polytope Z, TrackingDesign design);

  Formulation tag;
  LinearSystem sys;
  Polytope Z;
  TrackingDesign design;

  std::optional<Polytope> Xt;  // over (x, xa, ua)
  /// Fixed terminal set for STAN; when absent it is computed per target.
  std::optional<Polytope> Xf;
  std::optional<RobustIngredients> robust;
  int period = 0;
  std::optional<OutputBounds> bounds;
  std::optional<EconomicCost> economic;

  SolverSettings solver;
  ValidationReport validation;
  bool certified() const { return validation.certified(); }
};

struct SpecOptions {
  std::optional<Zonotope> W;
  double eps_alpha = 0.1;
  int period = 0;
  std::optional<EconomicCost> economic;
  InvariantSetOptions invariant;
  ValidationOptions validation{200, 7, 1e-8};
  SolverSettings solver;
};

/// Computes the ingredients required by `tag` (invariant set for tracking,
/// tube and tightened sets, output bounds) and runs the matching validator.
ControllerSpec make_controller_spec(Formulation tag, const LinearSystem& sys, const Polytope& Z,
                                    const TrackingDesign& design, const SpecOptions& options = {});

/// Checks of the economic variant: convex cost, gamma > 0 (warning
/// otherwise), N >= controllability index and an admissible setpoint.
ValidationReport validate_economic(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                   const EconomicCost& cost, const Vector& theta);

struct ControlStep {
  Vector u;
  bool feasible = false;
  SolveStatus status = SolveStatus::MaxIter;
  int iterations = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  /// Artificial reference at the current instant (the target itself for
  /// STAN, the centre of the harmonic reference for HMPC).
  Vector xa, ua, ya;
};

/// Receding-horizon controller: builds the program for the current state
/// and reference, solves it with a persistent ADMM workspace warm started
/// from the shifted previous solution, and applies the formulation's law.
class Controller {
 public:
  explicit Controller(ControllerSpec spec);

  ControlStep step(const Vector& x, int t, const ReferenceSchedule& schedule);
  StructuredProgram program(const Vector& x, int t, const ReferenceSchedule& schedule);

  const ControllerSpec& spec() const { return spec_; }
  /// Economic setpoint in use (ECON_MPCT only).
  const SteadyState& economic_target() const { return econ_target_; }
  void reset();

 private:
  const Polytope& terminal_set(const Vector& xr, const Vector& ur);
  void update_economic(const Vector& theta);

  ControllerSpec spec_;
  AdmmSolver solver_;
  std::optional<WarmStart> warm_;
  std::map<std::vector<double>, Polytope> xf_cache_;
  Vector theta_;
  SteadyState econ_target_;
};

/// Solution z of the previous step moved one stage ahead: predicted
/// trajectories shift by one, periodic references rotate, harmonic
/// parameters advance their phase by omega.
Vector shift_solution(const StructuredProgram& prog, const Vector& z, double omega = 0.0);

}  // namespace mpct

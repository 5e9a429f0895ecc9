#include "mpct/controller.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpct {
namespace {

constexpr double kFeasibleViolation = 1e-6;

struct NamedFormulation {
  Formulation f;
  const char* name;
};

constexpr NamedFormulation kNames[] = {
    {Formulation::Stan, "stan_mpc"},          {Formulation::LinMpct, "lin_mpct"},
    {Formulation::EquMpct, "equ_mpct"},       {Formulation::RobustMpct, "robust_mpct"},
    {Formulation::PeriodicMpct, "periodic_mpct"}, {Formulation::Hmpc, "hmpc"},
    {Formulation::EconMpct, "econ_mpct"},
};

// Formulations without Xt close the horizon with a terminal equality (or a
// per-target terminal set for STAN), so the sampled Xt check does not apply.
void replace_terminal_check(ValidationReport& rep, const char* detail) {
  for (auto& c : rep.checks) {
    if (c.name == "terminal_invariance") c = {"terminal_invariance", true, 0.0, detail};
  }
}

}  // namespace

const char* to_string(Formulation f) {
  for (const auto& n : kNames)
    if (n.f == f) return n.name;
  return "unknown";
}

Formulation formulation_from_string(const std::string& name) {
  for (const auto& n : kNames)
    if (name == n.name) return n.f;
  throw std::invalid_argument("unknown formulation: " + name);
}

ControllerSpec::ControllerSpec(Formulation tag_, LinearSystem sys_, Polytope Z_, TrackingDesign design_)
    : tag(tag_), sys(std::move(sys_)), Z(std::move(Z_)), design(std::move(design_)) {}

ValidationReport validate_economic(const LinearSystem& sys, const Polytope& Z, const TrackingDesign& design,
                                   const EconomicCost& cost, const Vector& theta) {
  ValidationReport rep;
  const Matrix Hs = 0.5 * (cost.H + cost.H.transpose());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(Hs).eigenvalues().minCoeff();
  rep.checks.push_back({"economic_convexity", min_eig >= -1e-10, min_eig, "smallest eigenvalue of the cost Hessian"});
  const int nu_idx = sys.controllability_index();
  rep.checks.push_back({"horizon", design.N >= nu_idx, static_cast<double>(design.N - nu_idx),
                        "N minus the controllability index"});
  try {
    const auto sp = economic_setpoint(sys, Z, design.sigma, cost, theta);
    Vector z(sp.x.size() + sp.u.size());
    z << sp.x, sp.u;
    const double slack = -Z.violation(z);
    rep.checks.push_back({"economic_setpoint", true, slack, "slack of the setpoint in Z"});
  } catch (const MpctError& e) {
    rep.checks.push_back({"economic_setpoint", false, -1.0, e.what()});
  }
  rep.checks.push_back({"offset_gamma", design.gamma > 0.0, design.gamma, "scale of the norm term in the offset"});
  if (!(design.gamma > 0.0))
    rep.warnings.push_back("gamma = 0: the offset cost has no linear lower bound and convergence is not guaranteed");
  return rep;
}

ControllerSpec make_controller_spec(Formulation tag, const LinearSystem& sys, const Polytope& Z,
                                    const TrackingDesign& design, const SpecOptions& options) {
  ControllerSpec spec(tag, sys, Z, design);
  spec.solver = options.solver;
  switch (tag) {
    case Formulation::Stan:
      spec.validation = validate_assumption1(sys, design, Z, nullptr, options.validation);
      replace_terminal_check(spec.validation, "maximal admissible set computed for each target");
      break;
    case Formulation::EquMpct:
      spec.validation = validate_assumption1(sys, design, Z, nullptr, options.validation);
      replace_terminal_check(spec.validation, "terminal equality constraint");
      break;
    case Formulation::LinMpct: {
      auto rep = invariant_set_for_tracking(sys, design.K, Z, design.sigma, options.invariant);
      spec.validation = validate_assumption1(sys, design, Z, &rep, options.validation);
      spec.Xt = std::move(rep.set);
      break;
    }
    case Formulation::RobustMpct: {
      if (!options.W) throw std::invalid_argument("robust_mpct requires a disturbance set W");
      RobustIngredients r{*options.W, {}, {}, {}};
      const Matrix AK = sys.A() + sys.B() * design.K;
      r.phi = rpi_outer_approx(AK, r.W, options.eps_alpha);
      r.Zbar = tighten(Z, r.phi.set, design.K);
      auto rep = invariant_set_for_tracking(sys, design.Kbar, r.Zbar, design.sigma, options.invariant);
      spec.validation =
          validate_assumption2(sys, design, r.W, r.phi.set, r.Zbar, &rep, options.validation);
      r.Xt_bar = std::move(rep.set);
      spec.robust = std::move(r);
      break;
    }
    case Formulation::PeriodicMpct:
      if (options.period < design.N) throw std::invalid_argument("periodic_mpct requires N <= period");
      spec.period = options.period;
      spec.validation = validate_assumption1(sys, design, Z, nullptr, options.validation);
      replace_terminal_check(spec.validation, "terminal equality constraint");
      break;
    case Formulation::Hmpc:
      spec.bounds = output_bounds_from_polytope(Z, sys.nx());
      spec.validation = validate_assumption1(sys, design, Z, nullptr, options.validation);
      replace_terminal_check(spec.validation, "terminal equality constraint");
      break;
    case Formulation::EconMpct:
      if (!options.economic) throw std::invalid_argument("econ_mpct requires an economic cost");
      spec.economic = *options.economic;
      spec.validation = validate_economic(sys, Z, design, *options.economic, Vector());
      break;
  }
  return spec;
}

Controller::Controller(ControllerSpec spec) : spec_(std::move(spec)), solver_(spec_.solver) {}

void Controller::reset() { warm_.reset(); }

const Polytope& Controller::terminal_set(const Vector& xr, const Vector& ur) {
  if (spec_.Xf) return *spec_.Xf;
  std::vector<double> key(xr.data(), xr.data() + xr.size());
  key.insert(key.end(), ur.data(), ur.data() + ur.size());
  auto it = xf_cache_.find(key);
  if (it == xf_cache_.end()) {
    auto rep = terminal_set_for_regulation(spec_.sys, spec_.design.K, spec_.Z, xr, ur);
    it = xf_cache_.emplace(std::move(key), std::move(rep.set)).first;
  }
  return it->second;
}

void Controller::update_economic(const Vector& theta) {
  if (theta_.size() == theta.size() && theta_ == theta && econ_target_.x.size() > 0) return;
  econ_target_ = economic_setpoint(spec_.sys, spec_.Z, spec_.design.sigma, *spec_.economic, theta);
  theta_ = theta;
}

StructuredProgram Controller::program(const Vector& x, int t, const ReferenceSchedule& schedule) {
  const auto& sys = spec_.sys;
  const auto& d = spec_.design;
  switch (spec_.tag) {
    case Formulation::Stan: {
      const auto ss = steady_state_for_ref(sys, spec_.Z, d.sigma, schedule.at(t));
      return build_stan_mpc(sys, spec_.Z, d, terminal_set(ss.x, ss.u), x, ss.x, ss.u);
    }
    case Formulation::LinMpct:
      if (!spec_.Xt) throw std::logic_error("lin_mpct controller without an invariant set for tracking");
      return build_lin_mpct(sys, spec_.Z, d, *spec_.Xt, x, schedule.at(t));
    case Formulation::EquMpct: {
      const auto ss = steady_state_target(sys, schedule.at(t));
      return build_equ_mpct(sys, spec_.Z, d, x, ss.x, ss.u);
    }
    case Formulation::RobustMpct: {
      const auto& r = *spec_.robust;
      return build_robust_mpct(sys, d, r.phi.set, r.Zbar, r.Xt_bar, x, schedule.at(t));
    }
    case Formulation::PeriodicMpct:
      return build_periodic_mpct(sys, spec_.Z, d, spec_.period, x, schedule.window(t, spec_.period));
    case Formulation::Hmpc: {
      const auto ss = steady_state_target(sys, schedule.at(t));
      return build_hmpc(sys, d, *spec_.bounds, x, ss.x, ss.u);
    }
    case Formulation::EconMpct: {
      const Vector theta = schedule.at(t);
      update_economic(theta);
      return build_econ_mpct(sys, spec_.Z, d, *spec_.economic, theta, econ_target_.x, econ_target_.u, x);
    }
  }
  throw std::logic_error("unhandled formulation");
}

ControlStep Controller::step(const Vector& x, int t, const ReferenceSchedule& schedule) {
  const StructuredProgram prog = program(x, t, schedule);
  const WarmStart* warm = (warm_ && warm_->z.size() == prog.dim()) ? &*warm_ : nullptr;
  const SolveResult res = solver_.solve(prog, warm);

  ControlStep out;
  out.status = res.status;
  out.iterations = res.iterations;
  out.objective = res.objective;
  out.primal_residual = prog.max_violation(res.z);
  const bool usable = res.status == SolveStatus::Solved || res.status == SolveStatus::MaxIter;
  out.feasible = usable && out.primal_residual <= kFeasibleViolation;
  if (!out.feasible) {
    warm_.reset();
    out.u = Vector::Constant(spec_.sys.nu(), std::numeric_limits<double>::quiet_NaN());
    return out;
  }

  const auto& L = prog.layout;
  const Vector u0 = L.get(res.z, "u", 0);
  if (spec_.tag == Formulation::RobustMpct) {
    out.u = u0 + spec_.design.K * (x - L.get(res.z, "x", 0));
  } else {
    out.u = u0;
  }
  const auto& sys = spec_.sys;
  switch (spec_.tag) {
    case Formulation::Stan: {
      const auto ss = steady_state_for_ref(sys, spec_.Z, spec_.design.sigma, schedule.at(t));
      out.xa = ss.x;
      out.ua = ss.u;
      break;
    }
    case Formulation::PeriodicMpct:
      out.xa = L.get(res.z, "xa", 0);
      out.ua = L.get(res.z, "ua", 0);
      break;
    case Formulation::Hmpc:
      out.xa = L.get(res.z, "xe");
      out.ua = L.get(res.z, "ue");
      break;
    default:
      out.xa = L.get(res.z, "xa");
      out.ua = L.get(res.z, "ua");
  }
  out.ya = sys.C() * out.xa + sys.D() * out.ua;
  warm_ = WarmStart{shift_solution(prog, res.z, spec_.design.omega), res.y};
  return out;
}

Vector shift_solution(const StructuredProgram& prog, const Vector& z, double omega) {
  Vector out = z;
  const auto& L = prog.layout;
  auto shift = [&](const std::string& name, bool periodic_tail) {
    if (!L.has(name)) return;
    const auto& s = L.at(name);
    for (int k = 0; k + 1 < s.count; ++k) out.segment(s.start(k), s.block) = z.segment(s.start(k + 1), s.block);
    if (periodic_tail && s.count > 1) {
      // The last sample repeats the first one of the new period.
      out.segment(s.start(s.count - 1), s.block) = z.segment(s.start(1 % s.count), s.block);
    }
  };
  shift("x", false);
  shift("u", false);
  if (L.has("xa") && L.at("xa").count == 1 && L.has("u") && L.at("u").count > 0) {
    // Close the shifted horizon at the artificial steady state.
    L.set(out, "u", L.at("u").count - 1, L.get(z, "ua"));
    L.set(out, "x", L.at("x").count - 1, L.get(z, "xa"));
  }
  if (L.has("xa") && L.at("xa").count > 1) {
    shift("xa", true);
    const auto& ua = L.at("ua");
    for (int k = 0; k < ua.count; ++k)
      out.segment(ua.start(k), ua.block) = z.segment(ua.start((k + 1) % ua.count), ua.block);
  }
  if (L.has("xs") && omega != 0.0) {
    const double c = std::cos(omega), s = std::sin(omega);
    for (const auto& [sn, cn] : {std::pair<const char*, const char*>{"xs", "xc"}, {"us", "uc"}}) {
      const Vector vs = L.get(z, sn), vc = L.get(z, cn);
      L.set(out, sn, 0, c * vs - s * vc);
      L.set(out, cn, 0, s * vs + c * vc);
    }
  }
  return out;
}

}  // namespace mpct

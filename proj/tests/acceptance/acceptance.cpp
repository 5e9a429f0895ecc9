// Acceptance checks for the tracking controller family on the double
// integrator example. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "example1.hpp"
#include "mpct/banded.hpp"
#include "mpct/sim.hpp"
#include "random_qp.hpp"

namespace mpct {
namespace {

using test::example1_constraints;
using test::example1_design;
using test::example1_system;
using test::inf_norm;
using test::scalar;
using test::vec;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Closed loops run with the deterministic adaptive penalty; at the fixed
// default rho = 1 some unreachable-reference solves need more than
// max_iter iterations.
ControllerSpec spec_for(Formulation f, TrackingDesign d = example1_design(), SpecOptions o = {}) {
  o.solver.adaptive_rho = true;
  return make_controller_spec(f, example1_system(), example1_constraints(), d, o);
}

Zonotope disturbance_set() { return Zonotope::box(vec({-0.05, -0.05}), vec({0.05, 0.05})); }

double max_error_from(const ClosedLoopTrace& tr, int from, const std::function<Vector(int)>& target) {
  double worst = 0.0;
  for (const auto& s : tr.steps)
    if (s.t >= from) worst = std::max(worst, inf_norm(Vector(s.y - target(s.t))));
  return worst;
}

Outcome c1_domain_of_attraction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto sched = ReferenceSchedule::constant(scalar(0));
  const GridSpec grid{vec({-10, -2}), vec({10, 2}), 0.25};
  const auto stan = doa_scan(spec_for(Formulation::Stan), sched, grid, 1);
  const auto lin = doa_scan(spec_for(Formulation::LinMpct), sched, grid, 1);
  const double secs = seconds_since(t0);
  const bool subset = doa_subset(stan, lin);
  const bool larger = lin.feasible_count() > stan.feasible_count();
  std::ostringstream os;
  os << "grid " << grid.size() << " points, stan " << stan.feasible_count() << ", lin " << lin.feasible_count()
     << ", subset " << (subset ? "yes" : "no") << ", " << fmt("%.1f s", secs);
  return {subset && larger && secs < 180.0, os.str()};
}

Outcome c2_reachable_convergence() {
  const auto sys = example1_system();
  const auto d = example1_design();
  const auto oracle = optimal_reachable_reference(sys, example1_constraints(), d.sigma, scalar(5), d.S);
  const auto tr = run_closed_loop(spec_for(Formulation::LinMpct), vec({0, 0}), ReferenceSchedule::constant(scalar(5)), 100);
  const auto m = convergence_report(tr, scalar(5), 1e-3, &example1_constraints());
  std::ostringstream os;
  os << "oracle ya " << oracle.ya(0) << ", settling step " << m.settling_step << ", final |y-5| "
     << fmt("%.2e", m.terminal_offset) << ", violations " << m.violations;
  const bool pass = tr.completed() && std::abs(oracle.ya(0) - 5.0) <= 1e-9 && m.settling_step >= 0 &&
                    m.settling_step < 100 && m.violations == 0;
  return {pass, os.str()};
}

Outcome c3_unreachable_convergence() {
  const auto sys = example1_system();
  const auto d = example1_design();
  const double ya = optimal_reachable_reference(sys, example1_constraints(), d.sigma, scalar(12), d.S).ya(0);
  const auto tr = run_closed_loop(spec_for(Formulation::LinMpct), vec({0, 0}), ReferenceSchedule::constant(scalar(12)), 200);
  const double y_end = tr.steps.back().y(0);
  std::ostringstream os;
  os << "oracle ya " << ya << ", terminal y " << y_end << ", gap " << fmt("%.2e", std::abs(y_end - ya));
  return {tr.completed() && std::abs(y_end - ya) <= 1e-3 && std::abs(ya - 9.9) <= 1e-6, os.str()};
}

Outcome c4_recursive_feasibility() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> when(1, 499);
  std::uniform_real_distribution<double> value(-15, 15);
  std::set<int> times_set{0};
  while (times_set.size() < 51) times_set.insert(when(rng));
  std::vector<int> times(times_set.begin(), times_set.end());
  std::vector<Vector> values;
  int unreachable = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    values.push_back(scalar(value(rng)));
    unreachable += std::abs(values.back()(0)) > 9.9;
  }
  const auto sched = ReferenceSchedule::piecewise(times, values);
  std::ostringstream os;
  os << times.size() - 1 << " switches (" << unreachable << " unreachable values)";
  bool pass = true;
  for (auto f : {Formulation::LinMpct, Formulation::EquMpct}) {
    const auto spec = spec_for(f);
    const auto tr = run_closed_loop(spec, vec({0, 0}), sched, 500);
    const auto m = convergence_report(tr, scalar(0), 1e-3, &example1_constraints());
    // Solves are accepted with violation <= 1e-6; the same bound applies here.
    os << "; " << to_string(f) << (spec.certified() ? " certified" : " UNCERTIFIED") << ", "
       << (tr.completed() ? "0 infeasible" : "infeasible at " + std::to_string(*tr.infeasible_at))
       << ", max violation " << fmt("%.1e", m.max_violation);
    pass = pass && spec.certified() && tr.completed() && m.max_violation <= 1e-6;
  }
  return {pass, os.str()};
}

Outcome c5_robust_tube() {
  SpecOptions o;
  o.W = disturbance_set();
  const auto spec = spec_for(Formulation::RobustMpct, example1_design(), o);
  const auto& r = *spec.robust;
  const auto sys = example1_system();
  const auto& d = spec.design;
  const Vector ya = optimal_reachable_reference(sys, r.Zbar, d.sigma, scalar(5), d.S).ya;
  const Zonotope tube = r.phi.set.linear_map(sys.C() + sys.D() * d.K);
  std::vector<std::uint64_t> seeds;
  std::mt19937_64 master(7);
  for (int i = 0; i < 200; ++i) seeds.push_back(master());
  const auto traces =
      run_batch(spec, vec({0, 0}), ReferenceSchedule::constant(scalar(5)), 100, *o.W, seeds, 1);
  int infeasible = 0, violations = 0;
  double worst_margin = -1e300, worst_dist = -1e300;
  for (const auto& tr : traces) {
    infeasible += !tr.completed();
    const auto m = convergence_report(tr, ya, tube, 1e-6, &spec.Z);
    violations += m.violations;
    for (const auto& s : tr.steps) {
      Vector z(3);
      z << s.x, s.u;
      worst_margin = std::max(worst_margin, spec.Z.violation(z));
    }
    const Zonotope shifted(tube.center() + ya, tube.generators());
    worst_dist = std::max(worst_dist, distance_to_zonotope(tr.steps.back().y, shifted));
  }
  std::ostringstream os;
  os << traces.size() << " runs, infeasible " << infeasible << ", violations " << violations
     << ", worst constraint value " << fmt("%.3g", worst_margin) << ", ya " << ya(0) << ", worst terminal distance "
     << fmt("%.2e", worst_dist);
  return {infeasible == 0 && violations == 0 && worst_margin <= 1e-9 && worst_dist <= 1e-6, os.str()};
}

Outcome c6_periodic() {
  const int tau = 20;
  const auto sys = example1_system();
  const auto d = example1_design();
  SpecOptions o;
  o.period = tau;
  const auto spec = spec_for(Formulation::PeriodicMpct, d, o);
  std::ostringstream os;
  bool pass = spec.certified();
  for (double amplitude : {3.0, 12.0}) {
    std::vector<Vector> samples;
    for (int k = 0; k < tau; ++k) samples.push_back(scalar(amplitude * std::sin(2 * M_PI * k / tau)));
    const auto oracle = optimal_periodic_reference(sys, spec.Z, d.sigma, tau, samples, d.S);
    const auto tr = run_closed_loop(spec, vec({0, 0}), ReferenceSchedule::periodic(samples), 10 * tau);
    if (!tr.completed()) return {false, "infeasible run"};
    const bool reachable = oracle.offset <= 1e-10;
    double err;
    if (reachable) {
      err = max_error_from(tr, 3 * tau, [&](int t) { return samples[t % tau]; });
    } else {
      err = max_error_from(tr, 9 * tau, [&](int t) { return oracle.ya[t % tau]; });
    }
    os << (reachable ? "reachable" : "unreachable") << " amplitude " << amplitude << ": max error "
       << fmt("%.2e", err) << (reachable ? " after 3 periods" : " vs periodic oracle") << "; ";
    pass = pass && err <= 1e-3 && (amplitude < 9.9) == reachable;
  }
  return {pass, os.str()};
}

Outcome c7_hmpc() {
  const auto sys = example1_system();
  auto d = example1_design();
  d.omega = 0.3;
  const double w = d.omega;
  const auto bounds = output_bounds_from_polytope(example1_constraints(), 2);
  std::mt19937_64 rng(31);
  // Harmonic parameter sets solving the harmonic equalities, scaled into the cones.
  const auto prog = build_hmpc(sys, d, bounds, vec({0, 0}), vec({0, 0}), scalar(0));
  const auto& L = prog.layout;
  Matrix Aeq = Matrix(prog.Aeq);
  std::vector<int> cols;
  for (const char* n : {"xe", "xs", "xc", "ue", "us", "uc"})
    for (int j = 0; j < L.at(n).block; ++j) cols.push_back(L.at(n).offset + j);
  std::vector<int> rows;
  for (int i = 0; i < Aeq.rows(); ++i) {
    bool stage = false;
    for (int j = 0; j < L.at("xe").offset; ++j) stage = stage || Aeq(i, j) != 0.0;
    if (!stage) rows.push_back(i);
  }
  Matrix M(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) M(i, j) = Aeq(rows[i], cols[j]);
  const Matrix basis = null_space(M);
  double worst = 0.0;
  int feasible_sets = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Vector h = basis * test::random_vector(static_cast<int>(basis.cols()), rng);
    Vector z = Vector::Zero(prog.dim());
    for (double scale = 1.0;; scale *= 0.5) {
      for (std::size_t j = 0; j < cols.size(); ++j) z(cols[j]) = scale * h(j);
      double cone = -1.0;
      for (const auto& c : prog.cones) {
        const Vector v = c.M * z + c.b;
        cone = std::max(cone, v.tail(v.size() - 1).norm() - v(0));
      }
      if (cone <= 0.0) break;
    }
    ++feasible_sets;
    const auto p = harmonic_parameters(prog, z);
    const int K = 3 * static_cast<int>(std::ceil(2 * M_PI / w));
    for (int k = 0; k <= K; ++k)
      worst = std::max(worst, inf_norm(Vector(p.x_at(w, k + 1) - sys.step(p.x_at(w, k), p.u_at(w, k)))));
  }
  std::ostringstream os;
  os << feasible_sets << " parameter sets, identity residual " << fmt("%.2e", worst);
  bool pass = worst <= 1e-10;
  for (double yr : {5.0, 12.0}) {
    const auto sched = ReferenceSchedule::constant(scalar(yr));
    auto dh = example1_design();
    dh.omega = w;
    SpecOptions o;
    o.solver.eps_abs = o.solver.eps_rel = 1e-10;
    const auto th = run_closed_loop(spec_for(Formulation::Hmpc, dh, o), vec({0, 0}), sched, 300);
    const auto te = run_closed_loop(spec_for(Formulation::EquMpct), vec({0, 0}), sched, 300);
    if (!th.completed() || !te.completed()) return {false, "infeasible run"};
    const double gap = inf_norm(Vector(th.x_final - te.x_final));
    os << "; yr " << yr << ": HMPC x " << th.x_final(0) << ", equ x " << te.x_final(0) << ", gap " << fmt("%.2e", gap);
    pass = pass && gap <= 1e-3;
  }
  return {pass, os.str()};
}

Outcome c8_solver_equivalence() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> dim(5, 200);
  double worst_obj = 0.0, worst_sol = 0.0;
  int not_solved = 0;
  for (int i = 0; i < 100; ++i) {
    const auto p = test::random_qp(dim(rng), rng);
    const auto ref = dense_reference_solve(p);
    const auto r = admm_qp(p);
    if (ref.status != SolveStatus::Solved || r.status != SolveStatus::Solved) {
      ++not_solved;
      continue;
    }
    worst_obj = std::max(worst_obj, std::abs(r.objective - ref.objective) / std::max(1.0, std::abs(ref.objective)));
    worst_sol = std::max(worst_sol, inf_norm(Vector(r.z - ref.z)));
  }

  double worst_wb = 0.0;
  for (int i = 0; i < 30; ++i) {
    const int n = 100 + 20 * i, r = 1 + i % 20, bw = 2 + i % 8;
    std::normal_distribution<double> nd;
    Matrix Md = Matrix::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = std::max(0, a - bw); b < a; ++b) Md(a, b) = Md(b, a) = nd(rng);
    for (int a = 0; a < n; ++a) Md(a, a) = Md.row(a).cwiseAbs().sum() + 1.0;
    const Matrix U = test::random_matrix(n, r, rng) * 0.3, V = test::random_matrix(n, r, rng) * 0.3;
    const Vector b = test::random_vector(n, rng);
    const Vector x = semibanded_solve(BandedFactor::factorize(to_sparse(Md)), U, V, b);
    worst_wb = std::max(worst_wb, inf_norm(Vector(Md * x + U * (V.transpose() * x) - b)) / inf_norm(b));
  }

  std::uniform_real_distribution<double> x1(-8, 8), x2(-1.5, 1.5), tgt(-12, 12);
  const auto sys = example1_system();
  double worst_ext = 0.0;
  int ext_failed = 0;
  SolverSettings s;
  s.eps_abs = s.eps_rel = 1e-11;
  s.max_iter = 200000;
  s.adaptive_rho = true;
  // Polishing would map both iterates onto the same active-set solve.
  s.polish = false;
  for (int i = 0; i < 50; ++i) {
    const auto d = example1_design(5 + i % 16);
    const auto ss = steady_state_target(sys, scalar(tgt(rng)));
    const auto p = build_equ_mpct(sys, example1_constraints(), d, vec({x1(rng), x2(rng)}), ss.x, ss.u);
    const auto a = AdmmSolver(s).solve(p);
    const auto e = admm_qp_extended(p, s);
    if (a.status != SolveStatus::Solved || e.status != SolveStatus::Solved) {
      ++ext_failed;
      continue;
    }
    worst_ext = std::max(worst_ext, inf_norm(Vector(a.z - e.z)));
  }
  std::ostringstream os;
  os << "random QPs: objective gap " << fmt("%.2e", worst_obj) << ", solution gap " << fmt("%.2e", worst_sol)
     << ", unsolved " << not_solved << "; Woodbury residual " << fmt("%.2e", worst_wb)
     << "; extended vs standard " << fmt("%.2e", worst_ext) << " (" << ext_failed << " unsolved)";
  return {not_solved == 0 && worst_obj <= 1e-5 && worst_sol <= 1e-4 && worst_wb <= 1e-9 && ext_failed == 0 &&
              worst_ext <= 1e-7,
          os.str()};
}

double fit_exponent(const std::vector<double>& N, const std::vector<double>& work) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < N.size(); ++i) {
    mx += std::log(N[i]);
    my += std::log(work[i]);
  }
  mx /= N.size();
  my /= N.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < N.size(); ++i) {
    sxy += (std::log(N[i]) - mx) * (std::log(work[i]) - my);
    sxx += (std::log(N[i]) - mx) * (std::log(N[i]) - mx);
  }
  return sxy / sxx;
}

Outcome c9_structure_scaling() {
  const auto sys = example1_system();
  std::vector<double> Ns, structured, dense, structured_total, dense_total;
  for (int N : {10, 20, 40, 80, 160}) {
    const auto d = example1_design(N);
    const auto p = build_equ_mpct(sys, example1_constraints(), d, vec({-5, 1}), vec({5, 0}), scalar(0));
    SolverSettings s;
    s.max_iter = 5;
    s.polish = false;
    s.backend = LinearBackend::Structured;
    const auto rs = AdmmSolver(s).solve(p);
    s.backend = LinearBackend::Dense;
    const auto rd = AdmmSolver(s).solve(p);
    Ns.push_back(N);
    structured.push_back(static_cast<double>(rs.linsolve_flops_per_iter));
    dense.push_back(static_cast<double>(rd.linsolve_flops_per_iter));
    structured_total.push_back(static_cast<double>(rs.iteration_flops));
    dense_total.push_back(static_cast<double>(rd.iteration_flops));
  }
  // Both paths share the sparse matrix-vector products; the KKT solve is
  // the part that depends on the structure.
  const double es = fit_exponent(Ns, structured), ed = fit_exponent(Ns, dense);
  std::ostringstream os;
  os << "KKT-solve operation-count exponent: structured " << fmt("%.3f", es) << ", dense " << fmt("%.3f", ed)
     << "; whole iteration incl. sparse products: structured " << fmt("%.3f", fit_exponent(Ns, structured_total))
     << ", dense " << fmt("%.3f", fit_exponent(Ns, dense_total));
  return {std::abs(es - 1.0) <= 0.15 && ed >= 1.85, os.str()};
}

Outcome c10_design_certificates() {
  const auto sys = example1_system();
  const auto d = example1_design();
  const Polytope Z = example1_constraints();
  const auto Xt = invariant_set_for_tracking(sys, d.K, Z, d.sigma);
  const auto rep = validate_assumption1(sys, d, Z, &Xt);
  const double inv = sampled_tracking_invariance(sys, d.K, Z, Xt.set, 10000, 2024);

  const Zonotope W = disturbance_set();
  const Matrix AK = sys.A() + sys.B() * d.K;
  const auto phi = rpi_outer_approx(AK, W);
  const Zonotope set = phi.set.compacted();
  const int p = set.num_generators(), pw = W.num_generators();
  double worst = -1e300;
  long long checked = 0;
  if (p + pw <= 20) {
    for (long long mask = 0; mask < (1LL << (p + pw)); ++mask) {
      Vector se(p), sw(pw);
      for (int i = 0; i < p; ++i) se(i) = (mask >> i) & 1 ? 1.0 : -1.0;
      for (int i = 0; i < pw; ++i) sw(i) = (mask >> (p + i)) & 1 ? 1.0 : -1.0;
      const Vector e = set.center() + set.generators() * se;
      const Vector w = W.center() + W.generators() * sw;
      const Vector next = AK * e + w;
      // Margin through support functions: max_q q'next - h(q) over the facets.
      const Polytope P = set.to_polytope();
      worst = std::max(worst, P.violation(next));
      ++checked;
    }
  }
  std::ostringstream os;
  os << "assumption checks " << (rep.certified() ? "pass" : "FAIL") << ", invariance worst "
     << fmt("%.2e", inv) << " on 10000 samples, RPI containment worst " << fmt("%.2e", worst) << " on " << checked
     << " extreme points (s = " << phi.s << ")";
  return {rep.certified() && inv <= 1e-8 && checked > 0 && worst <= 1e-9, os.str()};
}

Outcome c11_economic() {
  auto d = example1_design();
  d.gamma = 10;
  SpecOptions o;
  o.economic = EconomicCost{Matrix::Identity(3, 3), vec({-14, 0, 0}), Matrix::Zero(3, 1), 49};
  o.economic->G(0, 0) = 1;
  o.solver.eps_abs = o.solver.eps_rel = 1e-10;
  const auto spec = spec_for(Formulation::EconMpct, d, o);
  const auto sp = economic_setpoint(spec.sys, spec.Z, d.sigma, *o.economic, scalar(0));
  const auto tr = run_closed_loop(spec, vec({0, 0}), ReferenceSchedule::constant(scalar(0)), 200);
  const double gap = tr.completed() ? inf_norm(Vector(tr.x_final - vec({7, 0}))) : 1e300;

  // theta = -2 moves the setpoint to x = (8, 0) at t = 200.
  const auto sched = ReferenceSchedule::piecewise({0, 200}, {scalar(0), scalar(-2)});
  const auto tr2 = run_closed_loop(spec, vec({0, 0}), sched, 400);
  const auto sp2 = economic_setpoint(spec.sys, spec.Z, d.sigma, *o.economic, scalar(-2));
  const auto m = convergence_report(tr2, scalar(0), 1.0, &spec.Z);
  const double gap2 = tr2.completed() ? inf_norm(Vector(tr2.x_final - sp2.x)) : 1e300;
  std::ostringstream os;
  os << "setpoint (" << sp.x(0) << ", " << sp.x(1) << "), final gap " << fmt("%.2e", gap) << "; after theta change "
     << (tr2.completed() ? "all solves feasible" : "infeasible at " + std::to_string(*tr2.infeasible_at))
     << ", new setpoint " << sp2.x(0) << ", gap " << fmt("%.2e", gap2) << ", violations " << m.violations;
  const bool pass = spec.certified() && inf_norm(Vector(sp.x - vec({7, 0}))) <= 1e-8 && gap <= 1e-3 &&
                    tr2.completed() && m.violations == 0;
  return {pass, os.str()};
}

}  // namespace
}  // namespace mpct

int main() {
  using namespace mpct;
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"domain of attraction superset", c1_domain_of_attraction},
      {"reachable convergence", c2_reachable_convergence},
      {"unreachable convergence", c3_unreachable_convergence},
      {"recursive feasibility under switching", c4_recursive_feasibility},
      {"robust tube guarantees", c5_robust_tube},
      {"periodic tracking", c6_periodic},
      {"harmonic consistency", c7_hmpc},
      {"solver equivalence", c8_solver_equivalence},
      {"structure scaling", c9_structure_scaling},
      {"design certificates", c10_design_certificates},
      {"economic convergence", c11_economic},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("[%s] C%zu %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, r.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

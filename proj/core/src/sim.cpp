#include "mpct/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include "mpct/lp.hpp"

namespace mpct {
namespace {

constexpr double kPi = 3.14159265358979323846;

Vector output(const LinearSystem& sys, const Vector& x, const Vector& u) { return sys.C() * x + sys.D() * u; }

// error(y, t) is the tracking error of output y at time t.
template <class ErrorFn>
ConvergenceMetrics report(const ClosedLoopTrace& trace, double tol, const Polytope* Z, ErrorFn error) {
  ConvergenceMetrics m;
  const int n = static_cast<int>(trace.steps.size());
  int settle = n;
  for (int i = n - 1; i >= 0; --i) {
    if (error(trace.steps[i].y, trace.steps[i].t) > tol) break;
    settle = i;
  }
  if (n > 0) {
    m.terminal_offset = error(trace.steps.back().y, trace.steps.back().t);
    if (settle < n) m.settling_step = trace.steps[settle].t;
  }
  if (Z) {
    for (const auto& s : trace.steps) {
      Vector z(s.x.size() + s.u.size());
      z << s.x, s.u;
      const double v = Z->violation(z);
      if (v > 1e-9) ++m.violations;
      m.max_violation = std::max(m.max_violation, std::max(v, 0.0));
    }
  }
  m.converged = trace.completed() && n > 0 && m.settling_step >= 0 && m.violations == 0;
  return m;
}

void write_vec(std::ostream& os, const Vector& v, int size) {
  for (int i = 0; i < size; ++i) {
    os << ',';
    if (i < v.size()) os << v(i);
  }
}

void header(std::ostream& os, const char* name, int size) {
  for (int i = 0; i < size; ++i) os << ',' << name << i;
}

}  // namespace

ClosedLoopTrace run_closed_loop(const ControllerSpec& spec, const Vector& x0, const ReferenceSchedule& schedule,
                                int T, const std::optional<DisturbanceModel>& disturbance) {
  const auto& sys = spec.sys;
  if (x0.size() != sys.nx()) throw DimensionError("run_closed_loop: initial state has the wrong dimension");
  if (T < 1) throw std::invalid_argument("run_closed_loop: T must be at least 1");
  if (disturbance && disturbance->W.dim() != sys.nx())
    throw DimensionError("run_closed_loop: disturbance set has the wrong dimension");

  ClosedLoopTrace trace;
  trace.tag = to_string(spec.tag);
  trace.seed = disturbance ? disturbance->seed : 0;
  std::mt19937_64 rng(trace.seed);
  Controller ctrl(spec);
  Vector x = x0;
  trace.steps.reserve(T);
  for (int t = 0; t < T; ++t) {
    const ControlStep cs = ctrl.step(x, t, schedule);
    if (!cs.feasible) {
      trace.infeasible_at = t;
      break;
    }
    TraceStep s;
    s.t = t;
    s.x = x;
    s.u = cs.u;
    s.y = output(sys, x, cs.u);
    s.w = disturbance ? disturbance->W.sample(rng) : Vector::Zero(sys.nx());
    s.xa = cs.xa;
    s.ua = cs.ua;
    s.ya = cs.ya;
    s.status = cs.status;
    s.iterations = cs.iterations;
    s.objective = cs.objective;
    x = sys.A() * x + sys.B() * cs.u + s.w;
    trace.steps.push_back(std::move(s));
  }
  trace.x_final = x;
  return trace;
}

void require_feasible(const ClosedLoopTrace& trace) {
  if (trace.infeasible_at) throw InfeasibleAtStepError(*trace.infeasible_at);
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  const int workers = std::clamp(threads, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ClosedLoopTrace> run_batch(const ControllerSpec& spec, const Vector& x0, const ReferenceSchedule& schedule,
                                       int T, const Zonotope& W, const std::vector<std::uint64_t>& seeds,
                                       int threads) {
  std::vector<ClosedLoopTrace> out(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), threads, [&](int i) {
    out[i] = run_closed_loop(spec, x0, schedule, T, DisturbanceModel{W, seeds[i]});
  });
  return out;
}

int GridSpec::points_along(int dim) const {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const double span = upper(dim) - lower(dim);
  if (span < 0.0) return 0;
  return static_cast<int>(std::floor(span / step + 1e-9)) + 1;
}

int GridSpec::size() const {
  if (lower.size() != upper.size()) throw DimensionError("grid bounds have different dimensions");
  if (lower.size() == 0) return 0;
  int n = 1;
  for (Eigen::Index d = 0; d < lower.size(); ++d) n *= points_along(static_cast<int>(d));
  return n;
}

Vector GridSpec::point(int index) const {
  Vector p(lower.size());
  for (Eigen::Index d = 0; d < lower.size(); ++d) {
    const int n = points_along(static_cast<int>(d));
    p(d) = lower(d) + (index % n) * step;
    index /= n;
  }
  return p;
}

int DoAMap::feasible_count() const { return static_cast<int>(std::count(feasible.begin(), feasible.end(), true)); }

DoAMap doa_scan(const ControllerSpec& spec, const ReferenceSchedule& schedule, const GridSpec& grid, int threads) {
  if (grid.lower.size() != spec.sys.nx()) throw DimensionError("doa_scan: grid dimension differs from nx");
  DoAMap map;
  map.tag = to_string(spec.tag);
  map.grid = grid;
  const int n = grid.size();
  map.points.resize(n);
  for (int i = 0; i < n; ++i) map.points[i] = grid.point(i);
  std::vector<char> ok(n, 0);

  const int workers = std::clamp(threads, 1, std::max(n, 1));
  std::vector<std::unique_ptr<Controller>> ctrls;
  for (int w = 0; w < workers; ++w) ctrls.push_back(std::make_unique<Controller>(spec));
  SolverSettings fs = spec.solver;
  fs.feasibility_only = true;
  fs.polish = false;

  // Static partition so each worker owns one controller.
  parallel_for(workers, workers, [&](int w) {
    AdmmSolver feas(fs);
    for (int i = w; i < n; i += workers) {
      const StructuredProgram prog = ctrls[w]->program(map.points[i], 0, schedule);
      if (prog.kind == ProgramKind::QP) {
        const auto r = lp::find_feasible(Matrix(prog.F), prog.g, Matrix(prog.Aeq), prog.beq);
        ok[i] = r.status == lp::LpStatus::Optimal;
      } else {
        const auto r = feas.solve(prog);
        ok[i] = r.status == SolveStatus::Solved && prog.max_violation(r.z) <= 1e-6;
      }
    }
  });
  map.feasible.assign(ok.begin(), ok.end());
  return map;
}

bool doa_subset(const DoAMap& inner, const DoAMap& outer) {
  if (inner.points.size() != outer.points.size()) throw DimensionError("doa_subset: grids differ");
  for (std::size_t i = 0; i < inner.points.size(); ++i) {
    if ((inner.points[i] - outer.points[i]).lpNorm<Eigen::Infinity>() > 1e-12)
      throw DimensionError("doa_subset: grids differ");
    if (inner.feasible[i] && !outer.feasible[i]) return false;
  }
  return true;
}

double distance_to_zonotope(const Vector& y, const Zonotope& set, int directions) {
  const int n = static_cast<int>(y.size());
  if (set.dim() != n) throw DimensionError("distance_to_zonotope: dimension mismatch");
  double best = 0.0;
  auto probe = [&](const Vector& q) { best = std::max(best, q.dot(y) - set.support(q)); };
  if (n == 1) {
    probe(Vector::Ones(1));
    probe(-Vector::Ones(1));
  } else if (n == 2) {
    for (int i = 0; i < directions; ++i) {
      const double a = 2.0 * kPi * i / directions;
      probe((Vector(2) << std::cos(a), std::sin(a)).finished());
    }
  } else {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal;
    for (int i = 0; i < directions; ++i) {
      Vector q(n);
      for (int j = 0; j < n; ++j) q(j) = normal(rng);
      probe(q.normalized());
    }
  }
  return best;
}

ConvergenceMetrics convergence_report(const ClosedLoopTrace& trace, const Vector& target, double tol,
                                      const Polytope* Z) {
  return report(trace, tol, Z, [&](const Vector& y, int) { return (y - target).lpNorm<Eigen::Infinity>(); });
}

ConvergenceMetrics convergence_report(const ClosedLoopTrace& trace, const std::function<Vector(int)>& target,
                                      double tol, const Polytope* Z) {
  return report(trace, tol, Z, [&](const Vector& y, int t) { return (y - target(t)).lpNorm<Eigen::Infinity>(); });
}

ConvergenceMetrics convergence_report(const ClosedLoopTrace& trace, const Vector& target, const Zonotope& tube,
                                      double tol, const Polytope* Z) {
  const Zonotope shifted(tube.center() + target, tube.generators());
  return report(trace, tol, Z, [&](const Vector& y, int) { return distance_to_zonotope(y, shifted); });
}

void write_trace_csv(std::ostream& os, const ClosedLoopTrace& trace) {
  int nx = 0, nu = 0, ny = 0, na = 0;
  for (const auto& s : trace.steps) {
    nx = std::max<int>(nx, s.x.size());
    nu = std::max<int>(nu, s.u.size());
    ny = std::max<int>(ny, s.y.size());
    na = std::max<int>(na, s.ya.size());
  }
  os << 't';
  header(os, "x", nx);
  header(os, "u", nu);
  header(os, "y", ny);
  header(os, "ya", na);
  os << ",status,iters,objective\n";
  os << std::setprecision(12);
  for (const auto& s : trace.steps) {
    os << s.t;
    write_vec(os, s.x, nx);
    write_vec(os, s.u, nu);
    write_vec(os, s.y, ny);
    write_vec(os, s.ya, na);
    os << ',' << to_string(s.status) << ',' << s.iterations << ',' << s.objective << '\n';
  }
}

void write_doa_csv(std::ostream& os, const DoAMap& map) {
  const int n = static_cast<int>(map.grid.lower.size());
  for (int i = 0; i < n; ++i) os << 'x' << i << ',';
  os << "feasible\n" << std::setprecision(12);
  for (std::size_t i = 0; i < map.points.size(); ++i) {
    for (int d = 0; d < n; ++d) os << map.points[i](d) << ',';
    os << (map.feasible[i] ? 1 : 0) << '\n';
  }
}

}  // namespace mpct

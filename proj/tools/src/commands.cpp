#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

namespace mpct::cli {
namespace {

namespace fs = std::filesystem;
using json_io::to_json;

struct BuiltSpec {
  std::optional<ControllerSpec> spec;
  ValidationReport report;
};

// Design failures (no stabilizing gain, empty tightened set, ...) become a
// failed "design" check instead of aborting the command.
BuiltSpec build_spec(const ExperimentConfig& cfg, Formulation f) {
  BuiltSpec b;
  try {
    const TrackingDesign d = make_tracking_design(cfg);
    b.spec = make_controller_spec(f, cfg.sys, cfg.Z, d, cfg.options);
    b.report = b.spec->validation;
  } catch (const SchemaError&) {
    throw;
  } catch (const UnreachableReferenceError&) {
    throw;
  } catch (const MpctError& e) {
    b.report.checks.push_back({"design", false, 0.0, e.what()});
  }
  return b;
}

fs::path output_dir(const ExperimentConfig& cfg, const CommandOptions& opts) {
  const fs::path dir = opts.output_dir ? *opts.output_dir : cfg.output_dir;
  fs::create_directories(dir);
  return dir;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

const ReferenceSchedule& require_schedule(const ExperimentConfig& cfg) {
  if (!cfg.schedule) throw SchemaError("config: this command needs a 'schedule'");
  return *cfg.schedule;
}

Json sets_json(const ControllerSpec& spec) {
  Json j = {{"Z", to_json(spec.Z)}};
  if (spec.Xt) j["Xt"] = to_json(*spec.Xt);
  if (spec.Xf) j["Xf"] = to_json(*spec.Xf);
  if (spec.robust) {
    j["W"] = to_json(spec.robust->W);
    j["phi"] = to_json(spec.robust->phi);
    j["Zbar"] = to_json(spec.robust->Zbar);
    j["Xt_bar"] = to_json(spec.robust->Xt_bar);
  }
  if (spec.bounds) {
    j["output_bounds"] = {{"Cz", to_json(spec.bounds->Cz)},
                          {"Dz", to_json(spec.bounds->Dz)},
                          {"low", to_json(spec.bounds->low)},
                          {"high", to_json(spec.bounds->high)}};
  }
  return j;
}

// Oracle limit of the closed loop for the reference active at time t_ref.
struct Target {
  std::function<Vector(int)> point;
  std::optional<Zonotope> tube;
  Json description;
};

Target oracle_target(const ControllerSpec& spec, const ReferenceSchedule& schedule, int t_ref) {
  const auto& sys = spec.sys;
  const auto& d = spec.design;
  Target tg;
  auto fixed = [&](const Vector& y, const char* kind) {
    tg.point = [y](int) { return y; };
    tg.description = {{"kind", kind}, {"y", to_json(y)}};
  };
  switch (spec.tag) {
    case Formulation::Stan:
      fixed(schedule.at(t_ref), "reference");
      break;
    case Formulation::LinMpct:
      fixed(optimal_reachable_reference(sys, spec.Z, d.sigma, schedule.at(t_ref), d.S).ya, "optimal_reachable");
      break;
    case Formulation::EquMpct:
    case Formulation::Hmpc: {
      const auto tgt = steady_state_target(sys, schedule.at(t_ref));
      const auto ss = closest_steady_state(sys, spec.Z, d.sigma, tgt.x, tgt.u, d.T, d.Su);
      fixed(sys.output(ss.x, ss.u), "closest_steady_state");
      break;
    }
    case Formulation::RobustMpct: {
      const auto& r = *spec.robust;
      fixed(optimal_reachable_reference(sys, r.Zbar, d.sigma, schedule.at(t_ref), d.S).ya, "optimal_reachable_tube");
      tg.tube = r.phi.set.linear_map(sys.C() + sys.D() * d.K);
      break;
    }
    case Formulation::PeriodicMpct: {
      const int tau = spec.period;
      const auto ref = optimal_periodic_reference(sys, spec.Z, d.sigma, tau, schedule.window(0, tau), d.S);
      tg.point = [ya = ref.ya, tau](int t) { return ya[t % tau]; };
      Json samples = Json::array();
      for (const auto& y : ref.ya) samples.push_back(to_json(y));
      tg.description = {{"kind", "optimal_periodic"}, {"ya", samples}};
      break;
    }
    case Formulation::EconMpct: {
      const auto sp = economic_setpoint(sys, spec.Z, d.sigma, *spec.economic, schedule.at(t_ref));
      fixed(sys.output(sp.x, sp.u), "economic_setpoint");
      tg.description["x"] = to_json(sp.x);
      break;
    }
  }
  return tg;
}

ConvergenceMetrics metrics(const ClosedLoopTrace& trace, const Target& tg, double tol, const Polytope& Z) {
  if (tg.tube) return convergence_report(trace, tg.point(0), *tg.tube, tol, &Z);
  return convergence_report(trace, tg.point, tol, &Z);
}

template <class Body>
int guarded(std::ostream& err, Body body) {
  try {
    return body();
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kSchemaOrIo;
  } catch (const UnreachableReferenceError& e) {
    err << "unreachable reference: " << e.what() << "\n";
    return kUncertified;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kSchemaOrIo;
  } catch (const MpctError& e) {
    err << "error: " << e.what() << "\n";
    return kSchemaOrIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSchemaOrIo;
  }
}

std::string csv(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

int cmd_design(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto cfg = load_config(opts.config);
    const fs::path dir = output_dir(cfg, opts);
    bool certified = true;
    for (auto f : cfg.formulations) {
      const std::string tag = to_string(f);
      const BuiltSpec b = build_spec(cfg, f);
      if (b.spec) {
        write_atomic(dir / (tag + ".design.json"),
                     dump({{"schema", 1}, {"formulation", tag}, {"design", to_json(b.spec->design)}}));
        write_atomic(dir / (tag + ".sets.json"), dump(sets_json(*b.spec)));
      }
      Json rep = to_json(b.report);
      rep["schema"] = 1;
      rep["formulation"] = tag;
      write_atomic(dir / (tag + ".validation.json"), dump(rep));
      out << tag << ": " << (b.report.certified() ? "certified" : "uncertified") << "\n";
      for (const auto& c : b.report.checks)
        if (!c.passed) out << "  failed " << c.name << ": " << c.detail << "\n";
      for (const auto& w : b.report.warnings) out << "  warning: " << w << "\n";
      certified = certified && b.report.certified();
    }
    return certified ? kOk : kUncertified;
  });
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto cfg = load_config(opts.config);
    const auto& schedule = require_schedule(cfg);
    const fs::path dir = output_dir(cfg, opts);
    std::mt19937_64 master(cfg.run.seed);
    bool certified = true, feasible = true;
    for (auto f : cfg.formulations) {
      const std::string tag = to_string(f);
      const BuiltSpec b = build_spec(cfg, f);
      if (!b.spec) {
        out << tag << ": design failed\n";
        certified = false;
        continue;
      }
      const auto& spec = *b.spec;
      if (opts.dump_qp) {
        Controller ctrl(spec);
        write_atomic(dir / (tag + ".program.json"), dump(to_json(ctrl.program(cfg.run.x0, 0, schedule))));
      }
      std::vector<std::uint64_t> seeds;
      std::vector<ClosedLoopTrace> traces;
      if (cfg.options.W) {
        for (int i = 0; i < cfg.run.runs; ++i) seeds.push_back(master());
        traces = run_batch(spec, cfg.run.x0, schedule, cfg.run.T, *cfg.options.W, seeds, cfg.run.threads);
      } else {
        traces.push_back(run_closed_loop(spec, cfg.run.x0, schedule, cfg.run.T));
      }
      const Target tg = oracle_target(spec, schedule, cfg.run.T - 1);
      Json runs = Json::array();
      int failures = 0;
      for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& tr = traces[i];
        const std::string name =
            traces.size() == 1 ? "trace_" + tag + ".csv" : "trace_" + tag + "_" + std::to_string(i) + ".csv";
        write_atomic(dir / name, csv([&](std::ostream& os) { write_trace_csv(os, tr); }));
        Json r = {{"file", name},
                  {"seed", tr.seed},
                  {"completed", tr.completed()},
                  {"metrics", to_json(metrics(tr, tg, cfg.run.tolerance, cfg.Z))},
                  {"x_final", to_json(tr.x_final)}};
        if (tr.infeasible_at) {
          r["infeasible_at"] = *tr.infeasible_at;
          ++failures;
        }
        runs.push_back(std::move(r));
      }
      Json report = {{"schema", 1},         {"formulation", tag},  {"certified", spec.certified()},
                     {"seed", cfg.run.seed}, {"steps", cfg.run.T}, {"tolerance", cfg.run.tolerance},
                     {"target", tg.description}, {"runs", runs}};
      if (tg.tube) report["target"]["tube"] = to_json(*tg.tube);
      write_atomic(dir / ("report_" + tag + ".json"), dump(report));
      out << tag << ": " << traces.size() << " run(s), " << failures << " infeasible"
          << (spec.certified() ? "" : " (uncertified design)") << "\n";
      certified = certified && spec.certified();
      feasible = feasible && failures == 0;
    }
    if (!feasible) return kInfeasible;
    return certified ? kOk : kUncertified;
  });
}

int cmd_doa(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const auto cfg = load_config(opts.config);
    const auto& schedule = require_schedule(cfg);
    if (!cfg.grid) throw SchemaError("config: doa needs a 'grid'");
    const fs::path dir = output_dir(cfg, opts);
    std::vector<DoAMap> maps;
    bool certified = true;
    Json counts = Json::object();
    for (auto f : cfg.formulations) {
      const BuiltSpec b = build_spec(cfg, f);
      if (!b.spec) {
        out << to_string(f) << ": design failed\n";
        return kUncertified;
      }
      certified = certified && b.spec->certified();
      maps.push_back(doa_scan(*b.spec, schedule, *cfg.grid, cfg.run.threads));
      const auto& m = maps.back();
      write_atomic(dir / ("doa_" + m.tag + ".csv"), csv([&](std::ostream& os) { write_doa_csv(os, m); }));
      counts[m.tag] = m.feasible_count();
      out << m.tag << ": " << m.feasible_count() << " of " << m.points.size() << " grid points feasible\n";
    }
    Json comparisons = Json::array();
    bool superset = maps.size() > 1;
    for (std::size_t i = 1; i < maps.size(); ++i) {
      const bool subset = doa_subset(maps[0], maps[i]);
      const bool larger = maps[i].feasible_count() > maps[0].feasible_count();
      comparisons.push_back(
          {{"inner", maps[0].tag}, {"outer", maps[i].tag}, {"subset", subset}, {"strictly_larger", larger}});
      superset = superset && subset && larger;
    }
    Json summary = {{"schema", 1},
                    {"grid", {{"lower", to_json(cfg.grid->lower)},
                              {"upper", to_json(cfg.grid->upper)},
                              {"step", cfg.grid->step},
                              {"points", cfg.grid->size()}}},
                    {"counts", counts},
                    {"comparisons", comparisons},
                    {"superset", superset}};
    write_atomic(dir / "doa_summary.json", dump(summary));
    out << "superset: " << (superset ? "true" : "false") << "\n";
    return certified ? kOk : kUncertified;
  });
}

int cmd_solve(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    StructuredProgram prog;
    SolverSettings settings;
    fs::path dir = ".";
    if (opts.program) {
      std::ifstream in(*opts.program);
      if (!in) throw std::runtime_error("cannot open " + opts.program->string());
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw SchemaError(e.what());
      }
      prog = json_io::program_from_json(j);
      if (opts.output_dir) dir = *opts.output_dir;
      fs::create_directories(dir);
    } else {
      const auto cfg = load_config(opts.config);
      const BuiltSpec b = build_spec(cfg, cfg.formulations.front());
      if (!b.spec) return kUncertified;
      Controller ctrl(*b.spec);
      prog = ctrl.program(cfg.run.x0, 0, require_schedule(cfg));
      settings = cfg.options.solver;
      dir = output_dir(cfg, opts);
      if (opts.dump_qp) write_atomic(dir / "program.json", dump(to_json(prog)));
    }
    AdmmSolver solver(settings);
    const SolveResult r = solver.solve(prog);
    Json j = to_json(r);
    j["schema"] = 1;
    j["tag"] = prog.tag;
    j["max_violation"] = prog.max_violation(r.z);
    if (opts.check) {
      const SolveResult ref = dense_reference_solve(prog);
      j["reference"] = {{"status", to_string(ref.status)},
                        {"objective", ref.objective},
                        {"objective_gap", std::abs(ref.objective - r.objective)},
                        {"solution_gap", (ref.z - r.z).lpNorm<Eigen::Infinity>()}};
    }
    write_atomic(dir / "solution.json", dump(j));
    out << prog.tag << ": " << to_string(r.status) << " after " << r.iterations << " iterations, objective "
        << r.objective << "\n";
    return r.status == SolveStatus::Solved ? kOk : kInfeasible;
  });
}

int cmd_bench(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    auto cfg = load_config(opts.config);
    const auto& schedule = require_schedule(cfg);
    const fs::path dir = output_dir(cfg, opts);
    std::vector<int> horizons = opts.horizons;
    if (horizons.empty()) horizons.push_back(cfg.design.at("N").get<int>());
    Json rows = Json::array();
    for (int N : horizons) {
      cfg.design["N"] = N;
      const BuiltSpec b = build_spec(cfg, cfg.formulations.front());
      if (!b.spec) return kUncertified;
      Controller ctrl(*b.spec);
      const StructuredProgram prog = ctrl.program(cfg.run.x0, 0, schedule);
      std::vector<double> times;
      SolveResult r;
      for (int k = 0; k < std::max(1, opts.repeats); ++k) {
        AdmmSolver solver(cfg.options.solver);
        const auto t0 = std::chrono::steady_clock::now();
        r = solver.solve(prog);
        times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
      }
      std::sort(times.begin(), times.end());
      const double median = times[times.size() / 2];
      rows.push_back({{"N", N},
                      {"dim", prog.dim()},
                      {"status", to_string(r.status)},
                      {"iterations", r.iterations},
                      {"backend", r.backend},
                      {"median_ms", median},
                      {"linsolve_flops_per_iter", r.linsolve_flops_per_iter},
                      {"factor_flops", r.factor_flops}});
      out << "N=" << N << " dim=" << prog.dim() << " iters=" << r.iterations << " median " << median << " ms ("
          << r.backend << ")\n";
    }
    write_atomic(dir / "bench.json", dump({{"schema", 1}, {"formulation", to_string(cfg.formulations.front())},
                                           {"results", rows}}));
    return kOk;
  });
}

}  // namespace mpct::cli

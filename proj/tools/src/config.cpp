#include "config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mpct::cli {
namespace {

namespace fs = std::filesystem;
using json_io::check_keys;
using json_io::matrix_from_json;
using json_io::vector_from_json;

constexpr double kPi = 3.14159265358979323846;

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

template <class T>
T get(const Json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw SchemaError(where + "." + key + ": wrong type");
  }
}

RunParams run_from_json(const Json& j, int nx) {
  check_keys(j, {}, {"T", "x0", "seed", "runs", "threads", "tolerance"}, "run");
  RunParams r;
  if (j.contains("T")) r.T = get<int>(j, "T", "run");
  r.x0 = j.contains("x0") ? vector_from_json(j.at("x0"), "run.x0") : Vector::Zero(nx);
  if (j.contains("seed")) r.seed = get<std::uint64_t>(j, "seed", "run");
  if (j.contains("runs")) r.runs = get<int>(j, "runs", "run");
  if (j.contains("threads")) r.threads = get<int>(j, "threads", "run");
  if (j.contains("tolerance")) r.tolerance = get<double>(j, "tolerance", "run");
  if (r.T < 1 || r.runs < 1 || r.threads < 1) throw SchemaError("run: T, runs and threads must be positive");
  if (r.x0.size() != nx) throw SchemaError("run.x0: expected " + std::to_string(nx) + " entries");
  return r;
}

GridSpec grid_from_json(const Json& j, int nx) {
  check_keys(j, {"lower", "upper", "step"}, {}, "grid");
  GridSpec g{vector_from_json(j.at("lower"), "grid.lower"), vector_from_json(j.at("upper"), "grid.upper"),
             get<double>(j, "step", "grid")};
  if (g.lower.size() != nx || g.upper.size() != nx) throw SchemaError("grid: bounds must have nx entries");
  if (!(g.step > 0.0)) throw SchemaError("grid.step must be positive");
  return g;
}

std::vector<Vector> vector_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array");
  std::vector<Vector> out;
  for (const auto& v : j) out.push_back(vector_from_json(v, where));
  return out;
}

}  // namespace

ReferenceSchedule schedule_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type")) throw SchemaError("schedule: expected an object with a 'type'");
  const auto type = get<std::string>(j, "type", "schedule");
  try {
    if (type == "constant") {
      check_keys(j, {"type", "value"}, {}, "schedule");
      return ReferenceSchedule::constant(vector_from_json(j.at("value"), "schedule.value"));
    }
    if (type == "piecewise") {
      check_keys(j, {"type", "times", "values"}, {}, "schedule");
      return ReferenceSchedule::piecewise(get<std::vector<int>>(j, "times", "schedule"),
                                          vector_list(j.at("values"), "schedule.values"));
    }
    if (type == "periodic") {
      check_keys(j, {"type", "samples"}, {}, "schedule");
      return ReferenceSchedule::periodic(vector_list(j.at("samples"), "schedule.samples"));
    }
    if (type == "sinusoid") {
      // offset + amplitude * sin(2 pi k / period + phase), k = 0..period-1
      check_keys(j, {"type", "amplitude", "period"}, {"offset", "phase"}, "schedule");
      const Vector amp = vector_from_json(j.at("amplitude"), "schedule.amplitude");
      const Vector off =
          j.contains("offset") ? vector_from_json(j.at("offset"), "schedule.offset") : Vector::Zero(amp.size());
      const int period = get<int>(j, "period", "schedule");
      const double phase = j.contains("phase") ? get<double>(j, "phase", "schedule") : 0.0;
      if (period < 1 || off.size() != amp.size()) throw SchemaError("schedule: bad sinusoid parameters");
      std::vector<Vector> samples;
      for (int k = 0; k < period; ++k) samples.push_back(off + amp * std::sin(2.0 * kPi * k / period + phase));
      return ReferenceSchedule::periodic(std::move(samples));
    }
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("schedule: ") + e.what());
  }
  throw SchemaError("schedule: unknown type '" + type + "'");
}

ExperimentConfig parse_config(const Json& j, const fs::path& base_dir) {
  check_keys(j, {"schema", "system", "constraints", "design"},
             {"description", "formulation", "formulations", "period", "disturbance", "eps_alpha", "economic_cost",
              "solver", "invariant", "validation", "schedule", "run", "grid", "output_dir"},
             "config");
  if (!j.at("schema").is_number_integer() || j.at("schema").get<int>() != 1)
    throw SchemaError("config: unsupported schema version (expected 1)");

  const Json& sj = j.at("system");
  ExperimentConfig cfg(
      json_io::system_from_json(sj.is_string() ? read_json_file(base_dir / sj.get<std::string>()) : sj));
  const int nx = cfg.sys.nx(), nu = cfg.sys.nu();
  cfg.Z = json_io::polytope_from_json(j.at("constraints"), nx + nu);

  cfg.design = j.at("design");
  check_keys(cfg.design, {"Q", "R", "N"},
             {"sigma", "S", "T", "Su", "Th", "Sh", "omega", "gamma", "terminal_gain"}, "design");

  if (j.contains("formulation") == j.contains("formulations"))
    throw SchemaError("config: give exactly one of 'formulation' or 'formulations'");
  try {
    if (j.contains("formulation")) {
      cfg.formulations.push_back(formulation_from_string(get<std::string>(j, "formulation", "config")));
    } else {
      for (const auto& name : get<std::vector<std::string>>(j, "formulations", "config"))
        cfg.formulations.push_back(formulation_from_string(name));
      if (cfg.formulations.empty()) throw SchemaError("config.formulations: empty list");
    }
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }

  auto& o = cfg.options;
  if (j.contains("period")) o.period = get<int>(j, "period", "config");
  if (j.contains("disturbance")) o.W = json_io::zonotope_from_json(j.at("disturbance"));
  if (o.W && o.W->dim() != nx) throw SchemaError("disturbance: expected dimension nx");
  if (j.contains("eps_alpha")) o.eps_alpha = get<double>(j, "eps_alpha", "config");
  if (j.contains("economic_cost")) {
    o.economic = json_io::economic_cost_from_json(j.at("economic_cost"));
    if (o.economic->H.rows() != nx + nu) throw SchemaError("economic_cost: H must be (nx+nu) square");
  }
  if (j.contains("solver")) o.solver = json_io::solver_settings_from_json(j.at("solver"));
  if (j.contains("invariant")) {
    const Json& ij = j.at("invariant");
    check_keys(ij, {}, {"max_iter", "redundancy_tol"}, "invariant");
    if (ij.contains("max_iter")) o.invariant.max_iter = get<int>(ij, "max_iter", "invariant");
    if (ij.contains("redundancy_tol")) o.invariant.redundancy_tol = get<double>(ij, "redundancy_tol", "invariant");
  }
  if (j.contains("validation")) {
    const Json& vj = j.at("validation");
    check_keys(vj, {}, {"samples", "seed", "tol"}, "validation");
    if (vj.contains("samples")) o.validation.samples = get<int>(vj, "samples", "validation");
    if (vj.contains("seed")) o.validation.seed = get<std::uint64_t>(vj, "seed", "validation");
    if (vj.contains("tol")) o.validation.tol = get<double>(vj, "tol", "validation");
  }

  for (auto f : cfg.formulations) {
    if (f == Formulation::RobustMpct && !o.W) throw SchemaError("config: robust_mpct needs 'disturbance'");
    if (f == Formulation::PeriodicMpct && o.period < 1) throw SchemaError("config: periodic_mpct needs 'period'");
    if (f == Formulation::EconMpct && !o.economic) throw SchemaError("config: econ_mpct needs 'economic_cost'");
  }

  if (j.contains("schedule")) cfg.schedule = schedule_from_json(j.at("schedule"));
  cfg.run = run_from_json(j.contains("run") ? j.at("run") : Json::object(), nx);
  if (j.contains("grid")) cfg.grid = grid_from_json(j.at("grid"), nx);
  if (j.contains("output_dir")) cfg.output_dir = get<std::string>(j, "output_dir", "config");
  if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  const Json j = read_json_file(path);
  auto cfg = parse_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
  cfg.source = path;
  return cfg;
}

TrackingDesign make_tracking_design(const ExperimentConfig& cfg) {
  const Json& j = cfg.design;
  const auto& sys = cfg.sys;
  const Matrix Q = matrix_from_json(j.at("Q"), "design.Q");
  const Matrix R = matrix_from_json(j.at("R"), "design.R");
  if (Q.rows() != sys.nx() || Q.cols() != sys.nx() || R.rows() != sys.nu() || R.cols() != sys.nu())
    throw SchemaError("design: Q must be nx x nx and R nu x nu");
  const int N = get<int>(j, "N", "design");
  if (N < 1) throw SchemaError("design.N must be positive");
  const double sigma = j.contains("sigma") ? get<double>(j, "sigma", "design") : 0.99;
  if (!(sigma >= 0.0 && sigma < 1.0)) throw SchemaError("design.sigma must lie in [0, 1)");

  TrackingDesign d = make_design(sys, Q, R, N, sigma);
  auto weight = [&](const char* key, Matrix& dst) {
    if (!j.contains(key)) return;
    const Matrix W = matrix_from_json(j.at(key), std::string("design.") + key);
    if (W.rows() != dst.rows() || W.cols() != dst.cols())
      throw SchemaError(std::string("design.") + key + ": wrong size");
    dst = W;
  };
  weight("S", d.S);
  weight("T", d.T);
  weight("Su", d.Su);
  weight("Th", d.Th);
  weight("Sh", d.Sh);
  if (j.contains("omega")) d.omega = get<double>(j, "omega", "design");
  if (j.contains("gamma")) d.gamma = get<double>(j, "gamma", "design");
  if (j.contains("terminal_gain")) {
    const Json& tg = j.at("terminal_gain");
    check_keys(tg, {"Q", "R"}, {}, "design.terminal_gain");
    const Matrix Qt = matrix_from_json(tg.at("Q"), "design.terminal_gain.Q");
    const Matrix Rt = matrix_from_json(tg.at("R"), "design.terminal_gain.R");
    if (Qt.rows() != Q.rows() || Qt.cols() != Q.cols() || Rt.rows() != R.rows() || Rt.cols() != R.cols())
      throw SchemaError("design.terminal_gain: wrong weight sizes");
    d.Kbar = dare_lqr(sys.A(), sys.B(), Qt, Rt).K;
    d.P = lyapunov_terminal_cost(sys.A(), sys.B(), d.Kbar, Q, R);
  }
  return d;
}

}  // namespace mpct::cli

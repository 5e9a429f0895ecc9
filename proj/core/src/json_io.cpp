#include "mpct/json_io.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace mpct::json_io {
namespace {

Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double read_number(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw SchemaError(where + ": expected a number");
}

Matrix read_matrix_or(const Json& j, const char* key, const Matrix& fallback, const std::string& where) {
  return j.contains(key) ? matrix_from_json(j.at(key), where + "." + key) : fallback;
}

template <class T>
T read_scalar(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw SchemaError(where + "." + key + ": expected a boolean");
    return v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw SchemaError(where + "." + key + ": expected an integer");
    return v.get<T>();
  } else {
    return read_number(v, where + "." + key);
  }
}

Json layout_to_json(const VarLayout& L) {
  Json slices = Json::array();
  for (const auto& s : L.slices())
    slices.push_back({{"name", s.name}, {"offset", s.offset}, {"block", s.block}, {"count", s.count},
                      {"stride", s.stride}});
  return {{"size", L.size()}, {"slices", slices}};
}

VarLayout layout_from_json(const Json& j) {
  check_keys(j, {"size", "slices"}, {}, "layout");
  VarLayout L;
  for (const auto& s : j.at("slices")) {
    check_keys(s, {"name", "offset", "block"}, {"count", "stride"}, "layout.slices");
    L.add(s.at("name").get<std::string>(), s.at("offset").get<int>(), s.at("block").get<int>(),
          s.value("count", 1), s.value("stride", 0));
  }
  L.set_size(j.at("size").get<int>());
  return L;
}

SparseMatrix sparse_from_json(const Json& j, const std::string& where) {
  check_keys(j, {"rows", "cols", "entries"}, {}, where);
  SparseMatrix M(j.at("rows").get<int>(), j.at("cols").get<int>());
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : j.at("entries")) {
    if (!e.is_array() || e.size() != 3) throw SchemaError(where + ": entries must be [i, j, v]");
    const int r = e[0].get<int>(), c = e[1].get<int>();
    if (r < 0 || c < 0 || r >= M.rows() || c >= M.cols()) throw SchemaError(where + ": entry out of range");
    trip.emplace_back(r, c, read_number(e[2], where));
  }
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

}  // namespace

void check_keys(const Json& obj, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  std::set<std::string> allowed;
  for (const char* k : required) {
    if (!obj.contains(k)) throw SchemaError(where + ": missing key '" + k + "'");
    allowed.insert(k);
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw SchemaError(where + ": unknown key '" + k + "'");
}

Json to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(number(M(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected a nested array");
  if (j.empty()) return Matrix(0, 0);
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix M(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw SchemaError(where + ": rows must be arrays of equal length");
    for (std::size_t k = 0; k < cols; ++k) M(i, k) = read_number(j[i][k], where);
  }
  return M;
}

Vector vector_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw SchemaError(where + ": expected an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_array()) {
      if (j[i].size() != 1) throw SchemaError(where + ": expected a vector");
      v(i) = read_number(j[i][0], where);
    } else {
      v(i) = read_number(j[i], where);
    }
  }
  return v;
}

Json to_json(const LinearSystem& sys) {
  return {{"A", to_json(sys.A())}, {"B", to_json(sys.B())}, {"C", to_json(sys.C())}, {"D", to_json(sys.D())}};
}

LinearSystem system_from_json(const Json& j) {
  check_keys(j, {"A", "B", "C"}, {"D"}, "system");
  const Matrix A = matrix_from_json(j.at("A"), "system.A");
  const Matrix B = matrix_from_json(j.at("B"), "system.B");
  const Matrix C = matrix_from_json(j.at("C"), "system.C");
  const Matrix D = read_matrix_or(j, "D", Matrix::Zero(C.rows(), B.cols()), "system");
  try {
    return LinearSystem(A, B, C, D);
  } catch (const DimensionError& e) {
    throw SchemaError(std::string("system: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("system: ") + e.what());
  }
}

Json to_json(const Polytope& P) {
  Json j = {{"F", to_json(P.F())}, {"g", to_json(P.g())}};
  if (P.has_equalities()) {
    j["Feq"] = to_json(P.Feq());
    j["geq"] = to_json(P.geq());
  }
  return j;
}

Polytope polytope_from_json(const Json& j, int dim) {
  Polytope P;
  if (j.is_object() && j.contains("lower")) {
    check_keys(j, {"lower", "upper"}, {}, "polytope");
    const Vector lo = vector_from_json(j.at("lower"), "polytope.lower");
    const Vector hi = vector_from_json(j.at("upper"), "polytope.upper");
    if (lo.size() != hi.size()) throw SchemaError("polytope: lower and upper differ in size");
    P = Polytope::box(lo, hi);
  } else {
    check_keys(j, {"F", "g"}, {"Feq", "geq"}, "polytope");
    const Matrix F = matrix_from_json(j.at("F"), "polytope.F");
    const Vector g = vector_from_json(j.at("g"), "polytope.g");
    if (j.contains("Feq") != j.contains("geq")) throw SchemaError("polytope: Feq and geq go together");
    Matrix Feq;
    Vector geq;
    if (j.contains("Feq")) {
      Feq = matrix_from_json(j.at("Feq"), "polytope.Feq");
      geq = vector_from_json(j.at("geq"), "polytope.geq");
    }
    try {
      P = Polytope(F, g, Feq, geq);
    } catch (const DimensionError& e) {
      throw SchemaError(std::string("polytope: ") + e.what());
    }
  }
  if (dim >= 0 && P.dim() != dim)
    throw SchemaError("polytope: expected dimension " + std::to_string(dim) + ", got " + std::to_string(P.dim()));
  return P;
}

Json to_json(const Zonotope& Zn) {
  return {{"center", to_json(Zn.center())}, {"generators", to_json(Zn.generators())}};
}

Zonotope zonotope_from_json(const Json& j) {
  if (j.is_object() && j.contains("lower")) {
    check_keys(j, {"lower", "upper"}, {}, "zonotope");
    const Vector lo = vector_from_json(j.at("lower"), "zonotope.lower");
    const Vector hi = vector_from_json(j.at("upper"), "zonotope.upper");
    if (lo.size() != hi.size()) throw SchemaError("zonotope: lower and upper differ in size");
    return Zonotope::box(lo, hi);
  }
  check_keys(j, {"center", "generators"}, {}, "zonotope");
  const Vector c = vector_from_json(j.at("center"), "zonotope.center");
  Matrix G = matrix_from_json(j.at("generators"), "zonotope.generators");
  if (G.size() == 0) G = Matrix::Zero(c.size(), 0);
  if (G.rows() != c.size()) throw SchemaError("zonotope: generators must have one row per dimension");
  return Zonotope(c, G);
}

Json to_json(const TrackingDesign& d) {
  return {{"Q", to_json(d.Q)},   {"R", to_json(d.R)},   {"S", to_json(d.S)},         {"T", to_json(d.T)},
          {"Su", to_json(d.Su)}, {"Th", to_json(d.Th)}, {"Sh", to_json(d.Sh)},       {"P", to_json(d.P)},
          {"K", to_json(d.K)},   {"Kbar", to_json(d.Kbar)}, {"N", d.N},               {"sigma", d.sigma},
          {"omega", d.omega},    {"gamma", d.gamma}};
}

TrackingDesign design_from_json(const Json& j) {
  check_keys(j, {"Q", "R", "S", "T", "Su", "Th", "Sh", "P", "K", "Kbar", "N", "sigma"}, {"omega", "gamma"},
             "design");
  TrackingDesign d;
  for (auto [key, dst] : {std::pair<const char*, Matrix*>{"Q", &d.Q}, {"R", &d.R}, {"S", &d.S}, {"T", &d.T},
                          {"Su", &d.Su}, {"Th", &d.Th}, {"Sh", &d.Sh}, {"P", &d.P}, {"K", &d.K}, {"Kbar", &d.Kbar}})
    *dst = matrix_from_json(j.at(key), std::string("design.") + key);
  d.N = read_scalar(j, "N", 0, "design");
  d.sigma = read_scalar(j, "sigma", 0.99, "design");
  d.omega = read_scalar(j, "omega", 0.0, "design");
  d.gamma = read_scalar(j, "gamma", 0.0, "design");
  return d;
}

Json to_json(const EconomicCost& cost) {
  return {{"H", to_json(cost.H)}, {"c", to_json(cost.c)}, {"G", to_json(cost.G)}, {"d", cost.d}};
}

EconomicCost economic_cost_from_json(const Json& j) {
  check_keys(j, {"H"}, {"c", "G", "d"}, "economic_cost");
  EconomicCost cost;
  cost.H = matrix_from_json(j.at("H"), "economic_cost.H");
  const int n = static_cast<int>(cost.H.rows());
  if (cost.H.cols() != n) throw SchemaError("economic_cost.H must be square");
  cost.c = j.contains("c") ? vector_from_json(j.at("c"), "economic_cost.c") : Vector::Zero(n);
  cost.G = read_matrix_or(j, "G", Matrix::Zero(n, 0), "economic_cost");
  if (cost.G.size() == 0) cost.G = Matrix::Zero(n, 0);
  cost.d = read_scalar(j, "d", 0.0, "economic_cost");
  if (cost.c.size() != n || cost.G.rows() != n) throw SchemaError("economic_cost: c and G must match H");
  return cost;
}

Json to_json(const SolverSettings& s) {
  return {{"rho", s.rho},
          {"sigma", s.sigma},
          {"alpha", s.alpha},
          {"eps_abs", s.eps_abs},
          {"eps_rel", s.eps_rel},
          {"eps_prim_inf", s.eps_prim_inf},
          {"eps_dual_inf", s.eps_dual_inf},
          {"max_iter", s.max_iter},
          {"check_interval", s.check_interval},
          {"adaptive_rho", s.adaptive_rho},
          {"adaptive_rho_interval", s.adaptive_rho_interval},
          {"eq_rho_scale", s.eq_rho_scale},
          {"backend", to_string(s.backend)},
          {"polish", s.polish},
          {"record_history", s.record_history},
          {"feasibility_only", s.feasibility_only}};
}

SolverSettings solver_settings_from_json(const Json& j) {
  check_keys(j, {},
             {"rho", "sigma", "alpha", "eps_abs", "eps_rel", "eps_prim_inf", "eps_dual_inf", "max_iter",
              "check_interval", "adaptive_rho", "adaptive_rho_interval", "eq_rho_scale", "backend", "polish",
              "record_history", "feasibility_only"},
             "solver");
  SolverSettings s;
  const std::string w = "solver";
  s.rho = read_scalar(j, "rho", s.rho, w);
  s.sigma = read_scalar(j, "sigma", s.sigma, w);
  s.alpha = read_scalar(j, "alpha", s.alpha, w);
  s.eps_abs = read_scalar(j, "eps_abs", s.eps_abs, w);
  s.eps_rel = read_scalar(j, "eps_rel", s.eps_rel, w);
  s.eps_prim_inf = read_scalar(j, "eps_prim_inf", s.eps_prim_inf, w);
  s.eps_dual_inf = read_scalar(j, "eps_dual_inf", s.eps_dual_inf, w);
  s.max_iter = read_scalar(j, "max_iter", s.max_iter, w);
  s.check_interval = read_scalar(j, "check_interval", s.check_interval, w);
  s.adaptive_rho = read_scalar(j, "adaptive_rho", s.adaptive_rho, w);
  s.adaptive_rho_interval = read_scalar(j, "adaptive_rho_interval", s.adaptive_rho_interval, w);
  s.eq_rho_scale = read_scalar(j, "eq_rho_scale", s.eq_rho_scale, w);
  s.polish = read_scalar(j, "polish", s.polish, w);
  s.record_history = read_scalar(j, "record_history", s.record_history, w);
  s.feasibility_only = read_scalar(j, "feasibility_only", s.feasibility_only, w);
  try {
    if (j.contains("backend")) s.backend = backend_from_string(j.at("backend").get<std::string>());
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("solver: ") + e.what());
  }
  return s;
}

Json to_json(const ValidationReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"margin", number(c.margin)}, {"detail", c.detail}});
  return {{"certified", r.certified()}, {"checks", checks}, {"warnings", r.warnings}};
}

Json to_json(const InvariantSetReport& r) {
  return {{"set", to_json(r.set)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"removed_redundant", r.removed_redundant}};
}

Json to_json(const RpiApproximation& r) {
  return {{"set", to_json(r.set)}, {"s", r.s}, {"alpha", r.alpha}, {"scaling", r.scaling}};
}

Json to_json(const ConvergenceMetrics& m) {
  return {{"settling_step", m.settling_step},
          {"terminal_offset", number(m.terminal_offset)},
          {"violations", m.violations},
          {"max_violation", number(m.max_violation)},
          {"converged", m.converged}};
}

Json to_json(const SolveResult& r) {
  return {{"status", to_string(r.status)},
          {"iterations", r.iterations},
          {"objective", number(r.objective)},
          {"primal_residual", number(r.primal_residual)},
          {"dual_residual", number(r.dual_residual)},
          {"polished", r.polished},
          {"backend", r.backend},
          {"z", to_json(r.z)},
          {"y", to_json(r.y)}};
}

Json to_json(const SparseMatrix& M) {
  Json entries = Json::array();
  for (int k = 0; k < M.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(M, k); it; ++it) entries.push_back({it.row(), it.col(), number(it.value())});
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"entries", entries}};
}

Json to_json(const StructuredProgram& prog) {
  Json cones = Json::array();
  for (const auto& c : prog.cones) cones.push_back({{"M", to_json(c.M)}, {"b", to_json(c.b)}});
  Json j = {{"schema", 1},
            {"tag", prog.tag},
            {"kind", to_string(prog.kind)},
            {"H", to_json(prog.H)},
            {"q", to_json(prog.q)},
            {"c", number(prog.c)},
            {"Aeq", to_json(prog.Aeq)},
            {"beq", to_json(prog.beq)},
            {"F", to_json(prog.F)},
            {"g", to_json(prog.g)},
            {"cones", cones},
            {"layout", layout_to_json(prog.layout)}};
  if (prog.structure) {
    const auto& s = *prog.structure;
    j["structure"] = {{"HB", to_json(s.HB)}, {"U", to_json(s.U)}, {"V", to_json(s.V)}, {"global", s.global}};
  }
  return j;
}

StructuredProgram program_from_json(const Json& j) {
  check_keys(j, {"schema", "kind", "H", "q", "Aeq", "beq", "F", "g"}, {"tag", "c", "cones", "layout", "structure"},
             "program");
  if (j.at("schema") != 1) throw SchemaError("program: unsupported schema version");
  StructuredProgram p;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == to_string(ProgramKind::QP)) {
    p.kind = ProgramKind::QP;
  } else if (kind == to_string(ProgramKind::SOCP)) {
    p.kind = ProgramKind::SOCP;
  } else {
    throw SchemaError("program: unknown kind '" + kind + "'");
  }
  p.tag = j.value("tag", std::string());
  p.H = sparse_from_json(j.at("H"), "program.H");
  p.q = vector_from_json(j.at("q"), "program.q");
  p.c = read_scalar(j, "c", 0.0, "program");
  p.Aeq = sparse_from_json(j.at("Aeq"), "program.Aeq");
  p.beq = vector_from_json(j.at("beq"), "program.beq");
  p.F = sparse_from_json(j.at("F"), "program.F");
  p.g = vector_from_json(j.at("g"), "program.g");
  const Eigen::Index n = p.q.size();
  if (p.H.rows() != n || p.H.cols() != n || p.Aeq.cols() != n || p.F.cols() != n || p.Aeq.rows() != p.beq.size() ||
      p.F.rows() != p.g.size())
    throw SchemaError("program: inconsistent dimensions");
  if (j.contains("cones")) {
    for (const auto& c : j.at("cones")) {
      check_keys(c, {"M", "b"}, {}, "program.cones");
      SecondOrderCone cone{sparse_from_json(c.at("M"), "program.cones.M"), vector_from_json(c.at("b"), "cone.b")};
      if (cone.M.cols() != n || cone.M.rows() != cone.b.size() || cone.M.rows() < 1)
        throw SchemaError("program: inconsistent cone dimensions");
      p.cones.push_back(std::move(cone));
    }
  }
  if (!p.cones.empty() && p.kind == ProgramKind::QP) throw SchemaError("program: a QP cannot carry cones");
  if (j.contains("layout")) {
    p.layout = layout_from_json(j.at("layout"));
  } else {
    p.layout.add("z", 0, static_cast<int>(n));
    p.layout.set_size(static_cast<int>(n));
  }
  if (j.contains("structure")) {
    const auto& s = j.at("structure");
    check_keys(s, {"HB", "U", "V", "global"}, {}, "program.structure");
    LowRankStructure st;
    st.HB = sparse_from_json(s.at("HB"), "program.structure.HB");
    st.U = matrix_from_json(s.at("U"), "program.structure.U");
    st.V = matrix_from_json(s.at("V"), "program.structure.V");
    st.global = s.at("global").get<std::vector<int>>();
    p.structure = std::move(st);
  }
  return p;
}

}  // namespace mpct::json_io

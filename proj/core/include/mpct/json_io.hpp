#pragma once

#include <initializer_list>
#include <nlohmann/json.hpp>
#include <string>

#include "mpct/controller.hpp"
#include "mpct/sim.hpp"

namespace mpct {

using Json = nlohmann::json;

/// Malformed document: wrong type, missing or unknown key, bad dimensions.
class SchemaError : public MpctError {
 public:
  using MpctError::MpctError;
};

namespace json_io {

/// Throws SchemaError if `obj` is not an object, lacks one of `required` or
/// holds a key outside `required` and `optional`.
void check_keys(const Json& obj, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional, const std::string& where);

/// Matrices are row-major nested arrays; an empty array is a 0x0 matrix.
Json to_json(const Matrix& M);
Json to_json(const Vector& v);
Matrix matrix_from_json(const Json& j, const std::string& where);
/// Accepts a flat array or a single-column nested array.
Vector vector_from_json(const Json& j, const std::string& where);

/// {"A", "B", "C", "D"}; D defaults to zeros.
Json to_json(const LinearSystem& sys);
LinearSystem system_from_json(const Json& j);

/// {"F", "g", "Feq", "geq"} or {"lower", "upper"} for a box.
Json to_json(const Polytope& P);
Polytope polytope_from_json(const Json& j, int dim = -1);

/// {"center", "generators"} or {"lower", "upper"} for a box.
Json to_json(const Zonotope& Zn);
Zonotope zonotope_from_json(const Json& j);

Json to_json(const TrackingDesign& d);
TrackingDesign design_from_json(const Json& j);

Json to_json(const EconomicCost& cost);
EconomicCost economic_cost_from_json(const Json& j);

Json to_json(const SolverSettings& s);
/// Keys not present keep their defaults; unknown keys are rejected.
SolverSettings solver_settings_from_json(const Json& j);

Json to_json(const ValidationReport& r);
Json to_json(const InvariantSetReport& r);
Json to_json(const RpiApproximation& r);
Json to_json(const ConvergenceMetrics& m);
Json to_json(const SolveResult& r);

/// Sparse matrices are {"rows", "cols", "entries": [[i, j, v], ...]}.
Json to_json(const SparseMatrix& M);
/// Full program: objective, constraints, cones, layout and the low-rank
/// descriptor when present.
Json to_json(const StructuredProgram& prog);
StructuredProgram program_from_json(const Json& j);

}  // namespace json_io
}  // namespace mpct

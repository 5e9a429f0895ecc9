#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "mpct/model.hpp"

namespace mpct {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class ProgramKind { QP, SOCP };

const char* to_string(ProgramKind kind);

/// A named block of the decision vector: `count` consecutive elements of
/// size `block`, the i-th one starting at offset + i * stride.
struct VarSlice {
  std::string name;
  int offset = 0;
  int block = 0;
  int count = 1;
  int stride = 0;

  int start(int i) const { return offset + i * stride; }
};

class VarLayout {
 public:
  void add(std::string name, int offset, int block, int count = 1, int stride = 0);

  bool has(const std::string& name) const;
  const VarSlice& at(const std::string& name) const;
  const std::vector<VarSlice>& slices() const { return slices_; }
  int size() const { return size_; }
  void set_size(int n) { size_ = n; }

  /// Element i of slice `name` read from z.
  Vector get(const Vector& z, const std::string& name, int i = 0) const;
  void set(Vector& z, const std::string& name, int i, const Vector& value) const;

  /// Throws std::logic_error unless the slices are disjoint and cover [0, size).
  void validate() const;

 private:
  std::vector<VarSlice> slices_;
  int size_ = 0;
};

/// Second-order cone constraint (t; s) = M z + b with ||s||_2 <= t; the first
/// row of M maps to t.
struct SecondOrderCone {
  SparseMatrix M;
  Vector b;
  int size() const { return static_cast<int>(M.rows()); }
};

/// H = H_B + U V' where H_B is banded after the layout ordering and the low
/// rank term couples the reference block (the `global` variables) with the
/// rest of the decision vector.
struct LowRankStructure {
  SparseMatrix HB;
  Matrix U;
  Matrix V;
  std::vector<int> global;  // indices of the reference block
  int rank() const { return static_cast<int>(U.cols()); }
};

/// minimize z'Hz + q'z + c  s.t. Aeq z = beq, F z <= g, every cone holds.
struct StructuredProgram {
  ProgramKind kind = ProgramKind::QP;
  SparseMatrix H;
  Vector q;
  double c = 0.0;
  SparseMatrix Aeq;
  Vector beq;
  SparseMatrix F;
  Vector g;
  std::vector<SecondOrderCone> cones;
  std::optional<LowRankStructure> structure;
  VarLayout layout;
  std::string tag;

  int dim() const { return static_cast<int>(q.size()); }
  int num_cone_rows() const;
  double objective(const Vector& z) const;
  /// Largest violation over equalities, inequalities and cones.
  double max_violation(const Vector& z) const;
};

/// One addend of a linear expression: coeff * z[offset : offset + coeff.cols()].
struct Term {
  int offset;
  Matrix coeff;
};

/// Incremental assembler for structured programs.
class ProgramBuilder {
 public:
  explicit ProgramBuilder(int n) : n_(n), q_(Vector::Zero(n)) {}

  int dim() const { return n_; }

  /// Adds ||sum_j C_j z_j + r||_W^2 to the cost. Terms flagged `offset`
  /// must touch only the reference block; their Hessian is moved into the
  /// low-rank factor instead of H_B.
  void add_square(const std::vector<Term>& terms, const Vector& r, const Matrix& W, bool offset = false);
  void add_linear(int offset, const Vector& coeff);
  void add_constant(double c) { c_ += c; }

  void add_equality(const std::vector<Term>& terms, const Vector& rhs);
  void add_inequality(const std::vector<Term>& terms, const Vector& rhs);
  /// P over the stacked blocks (z_{o_1}, ..., z_{o_k}) with the given sizes.
  void add_polytope(const Polytope& P, const std::vector<int>& offsets, const std::vector<int>& sizes);
  /// (t_expr + t0; s_expr + s0) in the second-order cone; `t_terms` yields
  /// one row.
  void add_cone(const std::vector<Term>& t_terms, double t0, const std::vector<Term>& s_terms, const Vector& s0);

  /// Finishes assembly. When `global` is non-empty the low-rank structure is
  /// derived from the cross terms between the global block and the rest.
  StructuredProgram build(ProgramKind kind, VarLayout layout, const std::vector<int>& global, std::string tag);

 private:
  using Triplet = Eigen::Triplet<double>;
  void append_rows(std::vector<Triplet>& trip, int& rows, const std::vector<Term>& terms);

  int n_;
  std::vector<Triplet> H_, O_;
  Vector q_;
  double c_ = 0.0;
  std::vector<Triplet> Aeq_, F_;
  int eq_rows_ = 0, in_rows_ = 0;
  std::vector<double> beq_, g_;
  std::vector<SecondOrderCone> cones_;
};

SparseMatrix to_sparse(const Matrix& M, double drop = 0.0);

}  // namespace mpct

#include "mpct/program.hpp"

#include <algorithm>
#include <stdexcept>

namespace mpct {

const char* to_string(ProgramKind kind) { return kind == ProgramKind::QP ? "QP" : "SOCP"; }

// ------------------------------------------------------------------ VarLayout

void VarLayout::add(std::string name, int offset, int block, int count, int stride) {
  if (has(name)) throw std::logic_error("VarLayout: duplicate slice " + name);
  slices_.push_back(VarSlice{std::move(name), offset, block, count, count > 1 ? stride : block});
  size_ = std::max(size_, offset + (count - 1) * slices_.back().stride + block);
}

bool VarLayout::has(const std::string& name) const {
  return std::any_of(slices_.begin(), slices_.end(), [&](const VarSlice& s) { return s.name == name; });
}

const VarSlice& VarLayout::at(const std::string& name) const {
  for (const auto& s : slices_)
    if (s.name == name) return s;
  throw std::out_of_range("VarLayout: no slice named " + name);
}

Vector VarLayout::get(const Vector& z, const std::string& name, int i) const {
  const auto& s = at(name);
  if (i < 0 || i >= s.count) throw std::out_of_range("VarLayout: index out of range for " + name);
  return z.segment(s.start(i), s.block);
}

void VarLayout::set(Vector& z, const std::string& name, int i, const Vector& value) const {
  const auto& s = at(name);
  if (i < 0 || i >= s.count || value.size() != s.block) throw std::out_of_range("VarLayout: bad write to " + name);
  z.segment(s.start(i), s.block) = value;
}

void VarLayout::validate() const {
  std::vector<int> hits(size_, 0);
  for (const auto& s : slices_)
    for (int i = 0; i < s.count; ++i)
      for (int k = 0; k < s.block; ++k) ++hits[s.start(i) + k];
  for (int h : hits)
    if (h != 1) throw std::logic_error("VarLayout: slices overlap or leave gaps");
}

// ---------------------------------------------------------- StructuredProgram

int StructuredProgram::num_cone_rows() const {
  int r = 0;
  for (const auto& k : cones) r += k.size();
  return r;
}

double StructuredProgram::objective(const Vector& z) const { return z.dot(H * z) + q.dot(z) + c; }

double StructuredProgram::max_violation(const Vector& z) const {
  double v = 0.0;
  if (Aeq.rows() > 0) v = std::max(v, (Aeq * z - beq).cwiseAbs().maxCoeff());
  if (F.rows() > 0) v = std::max(v, (F * z - g).maxCoeff());
  for (const auto& k : cones) {
    const Vector ts = k.M * z + k.b;
    v = std::max(v, ts.tail(ts.size() - 1).norm() - ts(0));
  }
  return v;
}

SparseMatrix to_sparse(const Matrix& M, double drop) {
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      if (std::abs(M(i, j)) > drop) t.emplace_back(i, j, M(i, j));
  SparseMatrix S(M.rows(), M.cols());
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

// ------------------------------------------------------------- ProgramBuilder

void ProgramBuilder::add_square(const std::vector<Term>& terms, const Vector& r, const Matrix& W, bool offset) {
  for (const auto& a : terms) {
    const Matrix WCa = W * a.coeff;
    for (const auto& b : terms) {
      const Matrix blk = b.coeff.transpose() * WCa;  // rows: b vars, cols: a vars
      for (Eigen::Index i = 0; i < blk.rows(); ++i)
        for (Eigen::Index j = 0; j < blk.cols(); ++j)
          if (blk(i, j) != 0.0) {
            H_.emplace_back(b.offset + i, a.offset + j, blk(i, j));
            if (offset) O_.emplace_back(b.offset + i, a.offset + j, blk(i, j));
          }
    }
    q_.segment(a.offset, a.coeff.cols()) += 2.0 * WCa.transpose() * r;
  }
  c_ += r.dot(W * r);
}

void ProgramBuilder::add_linear(int offset, const Vector& coeff) { q_.segment(offset, coeff.size()) += coeff; }

void ProgramBuilder::append_rows(std::vector<Triplet>& trip, int& rows, const std::vector<Term>& terms) {
  const auto m = terms.front().coeff.rows();
  for (const auto& t : terms) {
    if (t.coeff.rows() != m) throw DimensionError("ProgramBuilder: terms disagree on row count");
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < t.coeff.cols(); ++j)
        if (t.coeff(i, j) != 0.0) trip.emplace_back(rows + i, t.offset + j, t.coeff(i, j));
  }
  rows += static_cast<int>(m);
}

void ProgramBuilder::add_equality(const std::vector<Term>& terms, const Vector& rhs) {
  append_rows(Aeq_, eq_rows_, terms);
  beq_.insert(beq_.end(), rhs.data(), rhs.data() + rhs.size());
}

void ProgramBuilder::add_inequality(const std::vector<Term>& terms, const Vector& rhs) {
  append_rows(F_, in_rows_, terms);
  g_.insert(g_.end(), rhs.data(), rhs.data() + rhs.size());
}

void ProgramBuilder::add_polytope(const Polytope& P, const std::vector<int>& offsets, const std::vector<int>& sizes) {
  int col = 0;
  std::vector<Term> ineq, eq;
  for (size_t k = 0; k < offsets.size(); ++k) {
    ineq.push_back({offsets[k], P.F().middleCols(col, sizes[k])});
    eq.push_back({offsets[k], P.Feq().middleCols(col, sizes[k])});
    col += sizes[k];
  }
  if (col != P.dim()) throw DimensionError("ProgramBuilder::add_polytope: block sizes do not match the set");
  if (P.num_ineq() > 0) add_inequality(ineq, P.g());
  if (P.num_eq() > 0) add_equality(eq, P.geq());
}

void ProgramBuilder::add_cone(const std::vector<Term>& t_terms, double t0, const std::vector<Term>& s_terms,
                              const Vector& s0) {
  std::vector<Triplet> trip;
  int rows = 0;
  append_rows(trip, rows, t_terms);
  append_rows(trip, rows, s_terms);
  SecondOrderCone k;
  k.M.resize(rows, n_);
  k.M.setFromTriplets(trip.begin(), trip.end());
  k.b.resize(rows);
  k.b << t0, s0;
  cones_.push_back(std::move(k));
}

StructuredProgram ProgramBuilder::build(ProgramKind kind, VarLayout layout, const std::vector<int>& global,
                                        std::string tag) {
  StructuredProgram p;
  p.kind = kind;
  p.tag = std::move(tag);
  p.H.resize(n_, n_);
  p.H.setFromTriplets(H_.begin(), H_.end());
  p.H.prune(0.0);
  p.q = q_;
  p.c = c_;
  p.Aeq.resize(eq_rows_, n_);
  p.Aeq.setFromTriplets(Aeq_.begin(), Aeq_.end());
  p.beq = Eigen::Map<const Vector>(beq_.data(), static_cast<Eigen::Index>(beq_.size()));
  p.F.resize(in_rows_, n_);
  p.F.setFromTriplets(F_.begin(), F_.end());
  p.g = Eigen::Map<const Vector>(g_.data(), static_cast<Eigen::Index>(g_.size()));
  p.cones = cones_;
  layout.set_size(n_);
  layout.validate();
  p.layout = std::move(layout);

  if (!global.empty()) {
    const int r = static_cast<int>(global.size());
    std::vector<int> pos(n_, -1);
    for (int k = 0; k < r; ++k) pos[global[k]] = k;
    SparseMatrix O(n_, n_);
    O.setFromTriplets(O_.begin(), O_.end());
    Matrix Hc = Matrix::Zero(n_, r);
    Matrix Oh = Matrix::Zero(n_, r);
    std::vector<Triplet> hb;
    for (int j = 0; j < n_; ++j) {
      for (SparseMatrix::InnerIterator it(p.H, j); it; ++it) {
        const int i = static_cast<int>(it.row());
        const bool gi = pos[i] >= 0, gj = pos[j] >= 0;
        if (gi != gj) {
          if (gj) Hc(i, pos[j]) = it.value();
        } else {
          hb.emplace_back(i, j, it.value());
        }
      }
    }
    for (int j = 0; j < n_; ++j)
      for (SparseMatrix::InnerIterator it(O, j); it; ++it) {
        hb.emplace_back(it.row(), j, -it.value());
        Oh(it.row(), pos[j]) += it.value();
      }
    LowRankStructure s;
    s.HB.resize(n_, n_);
    s.HB.setFromTriplets(hb.begin(), hb.end());
    s.HB.prune(1e-300, 1.0);
    Matrix E = Matrix::Zero(n_, r);
    for (int k = 0; k < r; ++k) E(global[k], k) = 1.0;
    s.U.resize(n_, 2 * r);
    s.U << Hc + Oh, E;
    s.V.resize(n_, 2 * r);
    s.V << E, Hc;
    s.global = global;
    p.structure = std::move(s);
  }
  return p;
}

}  // namespace mpct

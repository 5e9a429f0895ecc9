#pragma once

#include <vector>

#include <Eigen/Sparse>

#include "mpct/model.hpp"

namespace mpct {

/// Cholesky factorization M = L L' of a symmetric positive definite matrix
/// stored by rows over its envelope (profile): row i keeps the entries from
/// its first nonzero column up to the diagonal. For block-banded matrices the
/// envelope equals the band, and factor and solve costs grow linearly with
/// the number of blocks.
class BandedFactor {
 public:
  BandedFactor() = default;

  /// Reads the lower triangle of M. Throws std::runtime_error when M is not
  /// numerically positive definite.
  static BandedFactor factorize(const Eigen::SparseMatrix<double>& M);
  static BandedFactor factorize(const Matrix& M);

  int size() const { return n_; }
  /// Largest distance between a row's first stored column and the diagonal.
  int bandwidth() const { return bandwidth_; }
  long long envelope_size() const { return static_cast<long long>(values_.size()); }

  void solve_in_place(Eigen::Ref<Vector> b) const;
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& B) const;

  /// Floating point operations of one call to solve() with a single rhs.
  long long solve_flops() const { return 4 * envelope_size(); }
  long long factor_flops() const { return factor_flops_; }

 private:
  int n_ = 0;
  int bandwidth_ = 0;
  std::vector<int> first_;
  std::vector<long long> start_;
  std::vector<double> values_;
  long long factor_flops_ = 0;
};

/// Solves (M + U V') x = b with the Woodbury identity, given a factorization
/// of M. Throws SingularCapacitanceError when I + V' M^{-1} U is singular.
Vector semibanded_solve(const BandedFactor& factor, const Matrix& U, const Matrix& V, const Vector& b);

/// Reusable Woodbury solver: M^{-1} U and the capacitance factorization are
/// computed once, so each solve costs one banded solve plus O(n r) work.
class SemibandedSolver {
 public:
  SemibandedSolver() = default;
  SemibandedSolver(BandedFactor factor, Matrix U, Matrix V);

  Vector solve(const Vector& b) const;
  int size() const { return factor_.size(); }
  int rank() const { return static_cast<int>(U_.cols()); }
  const BandedFactor& factor() const { return factor_; }

  /// Floating point operations of one solve().
  long long solve_flops() const;

 private:
  BandedFactor factor_;
  Matrix U_, V_, MinvU_;
  Eigen::PartialPivLU<Matrix> capacitance_;
};

}  // namespace mpct

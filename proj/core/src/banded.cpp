#include "mpct/banded.hpp"

#include <cmath>
#include <stdexcept>

namespace mpct {

BandedFactor BandedFactor::factorize(const Eigen::SparseMatrix<double>& Msp) {
  const int n = static_cast<int>(Msp.rows());
  if (Msp.cols() != n) throw DimensionError("BandedFactor: matrix must be square");
  BandedFactor f;
  f.n_ = n;
  f.first_.assign(n, 0);
  for (int i = 0; i < n; ++i) f.first_[i] = i;
  // Column-major storage: entry (i, j) with i >= j lies in the lower triangle.
  for (int j = 0; j < n; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(Msp, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i > j && it.value() != 0.0) f.first_[i] = std::min(f.first_[i], j);
      if (j > i && it.value() != 0.0) f.first_[j] = std::min(f.first_[j], i);
    }
  f.start_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    f.start_[i + 1] = f.start_[i] + (i - f.first_[i] + 1);
    f.bandwidth_ = std::max(f.bandwidth_, i - f.first_[i]);
  }
  f.values_.assign(f.start_[n], 0.0);
  for (int j = 0; j < n; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(Msp, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i >= j) f.values_[f.start_[i] + (j - f.first_[i])] = it.value();
    }

  long long flops = 0;
  for (int i = 0; i < n; ++i) {
    double* Li = &f.values_[f.start_[i]];
    const int fi = f.first_[i];
    for (int j = fi; j < i; ++j) {
      const double* Lj = &f.values_[f.start_[j]];
      const int fj = f.first_[j];
      const int k0 = std::max(fi, fj);
      double s = Li[j - fi];
      for (int k = k0; k < j; ++k) s -= Li[k - fi] * Lj[k - fj];
      flops += 2 * (j - k0) + 1;
      Li[j - fi] = s / Lj[j - fj];
    }
    double d = Li[i - fi];
    for (int k = fi; k < i; ++k) d -= Li[k - fi] * Li[k - fi];
    flops += 2 * (i - fi) + 1;
    if (!(d > 0.0) || !std::isfinite(d)) throw std::runtime_error("BandedFactor: matrix is not positive definite");
    Li[i - fi] = std::sqrt(d);
  }
  f.factor_flops_ = flops;
  return f;
}

BandedFactor BandedFactor::factorize(const Matrix& M) { return factorize(Eigen::SparseMatrix<double>(M.sparseView())); }

void BandedFactor::solve_in_place(Eigen::Ref<Vector> b) const {
  if (b.size() != n_) throw DimensionError("BandedFactor::solve: size mismatch");
  for (int i = 0; i < n_; ++i) {
    const double* Li = &values_[start_[i]];
    const int fi = first_[i];
    double s = b(i);
    for (int k = fi; k < i; ++k) s -= Li[k - fi] * b(k);
    b(i) = s / Li[i - fi];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    const double* Li = &values_[start_[i]];
    const int fi = first_[i];
    b(i) /= Li[i - fi];
    const double xi = b(i);
    for (int k = fi; k < i; ++k) b(k) -= Li[k - fi] * xi;
  }
}

Vector BandedFactor::solve(const Vector& b) const {
  Vector x = b;
  solve_in_place(x);
  return x;
}

Matrix BandedFactor::solve(const Matrix& B) const {
  Matrix X = B;
  for (Eigen::Index j = 0; j < X.cols(); ++j) solve_in_place(X.col(j));
  return X;
}

namespace {

Eigen::PartialPivLU<Matrix> factor_capacitance(const Matrix& V, const Matrix& MinvU) {
  const auto r = V.cols();
  const Matrix C = Matrix::Identity(r, r) + V.transpose() * MinvU;
  // PartialPivLU does not report singularity; a rank-revealing check does.
  Eigen::FullPivLU<Matrix> check(C);
  check.setThreshold(1e-13);
  if (check.rank() < r) throw SingularCapacitanceError("Woodbury capacitance matrix is singular");
  return Eigen::PartialPivLU<Matrix>(C);
}

}  // namespace

Vector semibanded_solve(const BandedFactor& factor, const Matrix& U, const Matrix& V, const Vector& b) {
  if (U.rows() != factor.size() || V.rows() != factor.size() || U.cols() != V.cols())
    throw DimensionError("semibanded_solve: dimension mismatch");
  const Vector Mb = factor.solve(b);
  if (U.cols() == 0) return Mb;
  const Matrix MinvU = factor.solve(U);
  const auto cap = factor_capacitance(V, MinvU);
  return Mb - MinvU * cap.solve(V.transpose() * Mb);
}

SemibandedSolver::SemibandedSolver(BandedFactor factor, Matrix U, Matrix V)
    : factor_(std::move(factor)), U_(std::move(U)), V_(std::move(V)) {
  if (U_.rows() != factor_.size() || V_.rows() != factor_.size() || U_.cols() != V_.cols())
    throw DimensionError("SemibandedSolver: dimension mismatch");
  if (U_.cols() > 0) {
    MinvU_ = factor_.solve(U_);
    capacitance_ = factor_capacitance(V_, MinvU_);
  }
}

Vector SemibandedSolver::solve(const Vector& b) const {
  Vector x = factor_.solve(b);
  if (U_.cols() == 0) return x;
  x -= MinvU_ * capacitance_.solve(V_.transpose() * x);
  return x;
}

long long SemibandedSolver::solve_flops() const {
  const long long n = factor_.size(), r = U_.cols();
  return factor_.solve_flops() + (r > 0 ? 4 * n * r + 2 * r * r : 0);
}

}  // namespace mpct

#pragma once

#include <random>

#include "example1.hpp"
#include "mpct/program.hpp"

namespace mpct::test {

// Strictly convex QP of dimension n with a known feasible point: H = L L' +
// 0.1 I, about n/4 equalities and n/2 inequalities (half of them active at
// the feasible point), optionally with a box on every variable.
inline StructuredProgram random_qp(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 1);
  const Matrix L = random_matrix(n, n, rng) / std::sqrt(static_cast<double>(n));
  const Matrix H = L * L.transpose() + 0.1 * Matrix::Identity(n, n);
  const Vector x0 = random_vector(n, rng);
  const int me = n / 4, mi = n / 2;
  const Matrix Aeq = random_matrix(me, n, rng);
  const Matrix F = random_matrix(mi, n, rng);
  Vector slack(mi);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < mi; ++i) slack(i) = pick(rng) ? 0.0 : u(rng);

  StructuredProgram p;
  p.kind = ProgramKind::QP;
  p.H = to_sparse(H);
  p.q = 5.0 * random_vector(n, rng);
  p.c = 0.0;
  p.Aeq = to_sparse(Aeq);
  p.beq = Aeq * x0;
  p.F = to_sparse(F);
  p.g = F * x0 + slack;
  p.layout.add("z", 0, n);
  p.layout.set_size(n);
  p.tag = "random_qp";
  return p;
}

}  // namespace mpct::test

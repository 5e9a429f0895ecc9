#pragma once

#include "mpct/design.hpp"
#include "mpct/model.hpp"

namespace mpct::bench {

inline LinearSystem example1_system() {
  Matrix A(2, 2), B(2, 1), C(1, 2);
  A << 1, 1, 0, 1;
  B << 0.5, 1;
  C << 1, 0;
  return LinearSystem(A, B, C, Matrix::Zero(1, 1));
}

inline Polytope example1_constraints() {
  Vector lo(3), hi(3);
  lo << -10, -2, -0.5;
  hi << 10, 2, 0.5;
  return Polytope::box(lo, hi);
}

inline TrackingDesign example1_design(int N) {
  const auto sys = example1_system();
  TrackingDesign d = make_design(sys, 100 * Matrix::Identity(2, 2), Matrix::Identity(1, 1), N);
  d.S *= 100;
  d.T *= 100;
  d.Su *= 100;
  return d;
}

inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

inline Vector scalar(double a) { return Vector::Constant(1, a); }

}  // namespace mpct::bench

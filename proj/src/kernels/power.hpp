#pragma once

#include <cmath>

namespace fvlab::kernels::detail {

// Integer exponent evaluated by repeated squaring, or 0 when the exponent is
// not a small positive integer. Vector kernels use the same multiplication
// order, which keeps every ISA bit-identical.
inline int small_integer_exponent(double p) {
  if (p >= 1.0 && p <= 64.0 && p == std::floor(p)) {
    return static_cast<int>(p);
  }
  return 0;
}

inline double ipow(double base, int e) {
  double result = 1.0;
  while (e > 0) {
    if (e & 1) {
      result = result * base;
    }
    e >>= 1;
    if (e > 0) {
      base = base * base;
    }
  }
  return result;
}

inline double pow_scalar(double base, double p, int int_p) {
  return int_p > 0 ? ipow(base, int_p) : std::pow(base, p);
}

} // namespace fvlab::kernels::detail

#pragma once

#include <functional>

namespace fvlab::quad {

struct Result {
  double value = 0.0;
  double error_estimate = 0.0;
  int intervals = 0;
};

/// Adaptive Gauss-Kronrod (7/15) on [lo, hi], bisecting the interval with the
/// largest error estimate until the total estimate is below abs_tol or
/// max_intervals is reached. The interval starts out split into
/// initial_pieces equal parts.
Result integrate(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol = 1e-9, int max_intervals = 4000, int initial_pieces = 1);

/// Integral over (0, inf) through y = e^u, truncated to u in [-64, 709].
/// Suited to integrands bounded near 0 with at least algebraic decay
/// y^(-1-p), p > 0 (the truncation error there is ~ e^(-709 p)).
Result integrate_positive_axis(const std::function<double(double)>& f,
                               double abs_tol = 1e-9, int max_intervals = 4000);

} // namespace fvlab::quad

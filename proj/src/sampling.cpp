#include "fvlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fvlab/error.hpp"
#include "fvlab/specfun.hpp"

namespace fvlab {

HittingTimeLaw HittingTimeLaw::make(double start, double nu) {
  if (!(start > 0.0) || !std::isfinite(start)) {
    throw DomainError(fmt::format("hitting time: start must be positive, got {}", start));
  }
  BesselDim{nu}.require_transient("hitting time");
  return {start, nu};
}

namespace sampling {

double sample_standard_normal(RandomSource& rng) { return rng.normal(); }

double sample_gamma(double alpha, RandomSource& rng) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError(fmt::format("sample_gamma: alpha must be positive, got {}", alpha));
  }
  if (alpha < 1.0) {
    const double boosted = sample_gamma(alpha + 1.0, rng);
    const double g = boosted * std::exp(std::log(rng.uniform()) / alpha);
    // Underflow only for alpha near 0; keep the support strictly positive.
    return std::max(g, std::numeric_limits<double>::min());
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) {
      return d * v;
    }
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

double sample_chi_squared(double dof, RandomSource& rng) {
  if (!(dof > 0.0)) {
    throw DomainError(fmt::format("sample_chi_squared: dof must be positive, got {}", dof));
  }
  return 2.0 * sample_gamma(0.5 * dof, rng);
}

double sample_hitting_time(const HittingTimeLaw& law, RandomSource& rng) {
  BesselDim{law.nu}.require_transient("sample_hitting_time");
  if (!(law.start > 0.0)) {
    throw DomainError("sample_hitting_time: start must be positive");
  }
  return law.start / (2.0 * sample_gamma(law.alpha(), rng));
}

double sample_alpha_sq(double nu, RandomSource& rng) {
  if (!std::isfinite(nu) || nu >= 2.0) {
    throw DomainError(fmt::format("sample_alpha_sq: requires nu < 2, got {}", nu));
  }
  const double z = rng.normal();
  const double v = sample_chi_squared(2.0 - nu, rng);
  const double y = 2.0 * std::abs(z) / std::sqrt(v);
  return std::max(y, std::numeric_limits<double>::min());
}

double sample_student_t(double a, RandomSource& rng) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw DomainError(fmt::format("sample_student_t: a must be positive, got {}", a));
  }
  const double z = rng.normal();
  const double v = sample_chi_squared(a, rng);
  return z * std::sqrt(a / v);
}

} // namespace sampling
} // namespace fvlab

#pragma once

#include "fvlab/random.hpp"

namespace fvlab {

/// First hitting time of 0 for a squared Bessel process of dimension nu
/// started at `start`. For the Bessel process X = sqrt(Z), pass X_0^2.
struct HittingTimeLaw {
  double start = 1.0;
  double nu = 0.0;

  static HittingTimeLaw make(double start, double nu);
  /// Shape of the gamma variable G in T_0 = start / (2G).
  double alpha() const { return 1.0 - 0.5 * nu; }
};

namespace sampling {

double sample_standard_normal(RandomSource& rng);

/// Unit-scale gamma variate with shape alpha. Marsaglia-Tsang squeeze for
/// alpha >= 1; for alpha < 1 a Gamma(alpha+1) draw times U^(1/alpha).
double sample_gamma(double alpha, RandomSource& rng);

/// Chi-squared with dof degrees of freedom, 2 * Gamma(dof/2).
double sample_chi_squared(double dof, RandomSource& rng);

/// start / (2G), G ~ Gamma(1 - nu/2). Exact in law.
double sample_hitting_time(const HittingTimeLaw& law, RandomSource& rng);

/// Exact draw of alpha_1^2 as 2|Z|/sqrt(V), Z ~ N(0,1), V ~ chi^2(2 - nu).
double sample_alpha_sq(double nu, RandomSource& rng);

/// Student-t with a degrees of freedom as Z sqrt(a / V), V ~ chi^2(a).
double sample_student_t(double a, RandomSource& rng);

} // namespace sampling
} // namespace fvlab

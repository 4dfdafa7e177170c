#pragma once

#include <string>
#include <vector>

namespace fvlab {

/// Bessel dimension. Holds any finite real; operations that need nu < 2
/// check it themselves via require_transient().
struct BesselDim {
  double nu = 0.0;

  // Throws NoFiniteHittingTime when nu >= 2 (or nu is not finite).
  void require_transient(const char* op) const;
};

namespace specfun {

inline constexpr double kEulerGamma = 0.57721566490153286061;

/// ln Gamma(x) for x > 0. Lanczos (g = 607/128, 15 terms) below x = 10 and
/// the Stirling series above; absolute error below 1e-12 on [1e-3, 1e3].
double log_gamma(double x);

/// psi(x) = d/dx ln Gamma(x) for x > 0. Upward recurrence to x >= 8, then
/// the asymptotic series through the x^-14 term. Absolute error below 1e-10
/// on [1e-3, 1e3].
double digamma(double x);

/// Unit-scale gamma density x^(alpha-1) e^-x / Gamma(alpha).
double gamma_density(double x, double alpha);

/// Student-t density with a > 0 degrees of freedom.
double student_t_density(double x, double a);

/// Jump-location function of the two-particle system in closed form. It
/// integrates to 1/2; the density of alpha_1^2 is 2h.
///   h(y) = 2^(2-nu)/sqrt(pi) * Gamma((3-nu)/2)/Gamma(1-nu/2) * (y^2+4)^(-(3-nu)/2)
double alpha_sq_density(double y, double nu);

/// Same density as a truncated power series in z = y/(y+2)^2 with
/// coefficients c_n = Gamma(2n+3-nu) / (n! Gamma(n+2-nu/2)). Summation stops
/// at n_terms or once a term drops below 1e-15 of the partial sum. All terms
/// are positive, so every partial sum is a lower bound of the density.
double alpha_sq_density_series(double y, double nu, int n_terms);

/// I(nu) = (psi(1) - psi((2-nu)/2)) / 4 = integral of h(y) ln y, which equals
/// E ln alpha_1 (E ln alpha_1^2 is 2 I). Negative iff nu < 0.
double i_of_nu(double nu);

/// Drift of the reflected power-drift diffusion, b(x) = -1/(beta x^(beta-1)).
double power_drift(double x, double beta);

/// Solution of y' = b(y), y(s) = a:  y(t) = (a^beta + s - t)^(1/beta),
/// defined for s <= t <= s + a^beta.
double ode_flow(double s, double a, double t, double beta);

struct ProofConstants {
  double a = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;
  int n_particles = 0;
  double u = 0.0;          // (1-gamma) a^beta
  double delta_bar = 0.0;  // a [1 - (1-eps gamma)^(1/beta)]
  double M = 0.0;          // ((1-eps gamma)/(gamma(1-eps)))^(1-1/beta)
  std::vector<double> delta_hat;  // delta_hat[n-1] = delta_bar / (M+1)^(N-n)
  double c4 = 0.0;         // gamma^(1/beta) + 1 - (1-eps gamma)^(1/beta)

  // Smallness conditions that epsilon is supposed to satisfy.
  bool time_margin_holds = false;      // (1-gamma/2)(a-delta_bar)^beta > (1-gamma) a^beta
  bool contraction_holds = false;      // c4 < 1
  bool deviation_window_holds = false; // window condition of fw check with delta_bar
};

ProofConstants proof_constants(double a, double beta, double gamma,
                               double epsilon, int n_particles);

/// Lipschitz constant of b on [a (gamma/2)^(1/beta) / 2, 2a].
double fw_lipschitz(double a, double beta, double gamma);

/// Checks the window condition
///   a(gamma/2)^(1/beta)/2 <= y(T) - delta  and  y(0) + delta <= 2a,
/// T = (1-gamma/2) a^beta. Returns an empty string when it holds, otherwise
/// a description of the failing inequality.
std::string fw_window_violation(double a, double beta, double gamma, double delta);

} // namespace specfun
} // namespace fvlab

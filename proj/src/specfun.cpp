#include "fvlab/specfun.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "fvlab/error.hpp"

namespace fvlab {

void BesselDim::require_transient(const char* op) const {
  if (!std::isfinite(nu)) {
    throw DomainError(fmt::format("{}: nu must be finite", op));
  }
  if (nu >= 2.0) {
    throw NoFiniteHittingTime(fmt::format("{}: nu = {} >= 2", op, nu));
  }
}

namespace specfun {
namespace {

void require_positive(double x, const char* op, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(fmt::format("{}: {} must be positive and finite, got {}", op, name, x));
  }
}

void require_nu_below_two(double nu, const char* op) {
  if (!std::isfinite(nu) || nu >= 2.0) {
    throw DomainError(fmt::format("{}: requires nu < 2, got {}", op, nu));
  }
}

constexpr double kLanczosG = 607.0 / 128.0;
constexpr std::array<double, 15> kLanczos = {
    0.99999999999999709182,     57.156235665862923517,     -59.597960355475491248,
    14.136097974741747174,      -0.49191381609762019978,   .33994649984811888699e-4,
    .46523628927048575665e-4,   -.98374475304879564677e-4, .15808870322491248884e-3,
    -.21026444172410488319e-3,  .21743961811521264320e-3,  -.16431810653676389022e-3,
    .84418223983852743293e-4,   -.26190838401581408670e-4, .36899182659531622704e-5};

double lanczos_log_gamma(double x) {
  const double z = x - 1.0;
  double sum = kLanczos[0];
  for (std::size_t k = 1; k < kLanczos.size(); ++k) {
    sum += kLanczos[k] / (z + static_cast<double>(k));
  }
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

// Stirling series; at x >= 10 the x^-9 term leaves error below 1e-16.
double stirling_log_gamma(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
  return (x - 0.5) * (std::log(x) - 1.0) - 0.5 + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

} // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma", "x");
  if (x < 0.5) {
    return lanczos_log_gamma(x + 1.0) - std::log(x);
  }
  if (x < 10.0) {
    return lanczos_log_gamma(x);
  }
  return stirling_log_gamma(x);
}

double digamma(double x) {
  require_positive(x, "digamma", "x");
  double shift = 0.0;
  while (x < 8.0) {
    shift += 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  // Bernoulli terms B_2k / (2k x^2k), k = 1..7.
  const double tail =
      inv2 * (1.0 / 12.0 -
               inv2 * (1.0 / 120.0 -
                       inv2 * (1.0 / 252.0 -
                               inv2 * (1.0 / 240.0 -
                                       inv2 * (1.0 / 132.0 -
                                               inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
  return std::log(x) - 0.5 / x - tail - shift;
}

double gamma_density(double x, double alpha) {
  require_positive(x, "gamma_density", "x");
  require_positive(alpha, "gamma_density", "alpha");
  return std::exp((alpha - 1.0) * std::log(x) - x - log_gamma(alpha));
}

double student_t_density(double x, double a) {
  require_positive(a, "student_t_density", "a");
  if (!std::isfinite(x)) {
    throw DomainError("student_t_density: x must be finite");
  }
  const double log_norm =
      log_gamma(0.5 * (a + 1.0)) - log_gamma(0.5 * a) - 0.5 * std::log(std::numbers::pi * a);
  return std::exp(log_norm - 0.5 * (a + 1.0) * std::log1p(x * x / a));
}

double alpha_sq_density(double y, double nu) {
  require_nu_below_two(nu, "alpha_sq_density");
  if (!(y >= 0.0) || !std::isfinite(y)) {
    throw DomainError(fmt::format("alpha_sq_density: requires finite y >= 0, got {}", y));
  }
  const double p = 0.5 * (3.0 - nu);
  const double log_norm = (2.0 - nu) * std::numbers::ln2 - 0.5 * std::log(std::numbers::pi) +
                          log_gamma(p) - log_gamma(1.0 - 0.5 * nu);
  return std::exp(log_norm - p * std::log(y * y + 4.0));
}

double alpha_sq_density_series(double y, double nu, int n_terms) {
  require_nu_below_two(nu, "alpha_sq_density_series");
  if (!(y >= 0.0) || !std::isfinite(y)) {
    throw DomainError(fmt::format("alpha_sq_density_series: requires finite y >= 0, got {}", y));
  }
  if (n_terms < 1) {
    throw DomainError("alpha_sq_density_series: n_terms must be >= 1");
  }
  const double z = y / ((y + 2.0) * (y + 2.0));
  const double log_z = std::log(z);  // -inf at y = 0; only the n = 0 term survives
  double sum = 0.0;
  for (int n = 0; n < n_terms; ++n) {
    const double dn = static_cast<double>(n);
    const double log_c = log_gamma(2.0 * dn + 3.0 - nu) -
                         log_gamma(dn + 1.0) - log_gamma(dn + 2.0 - 0.5 * nu);
    const double term = (n == 0) ? std::exp(log_c) : std::exp(log_c + dn * log_z);
    sum += term;
    if (term < 1e-15 * sum) {
      break;
    }
  }
  return std::exp((nu - 3.0) * std::log(y + 2.0) - log_gamma(1.0 - 0.5 * nu)) * sum;
}

double i_of_nu(double nu) {
  require_nu_below_two(nu, "i_of_nu");
  return 0.25 * (digamma(1.0) - digamma(0.5 * (2.0 - nu)));
}

double power_drift(double x, double beta) {
  return -1.0 / (beta * std::pow(x, beta - 1.0));
}

double ode_flow(double s, double a, double t, double beta) {
  require_positive(a, "ode_flow", "a");
  if (!(beta > 0.0)) {
    throw DomainError("ode_flow: beta must be positive");
  }
  const double a_pow = std::pow(a, beta);
  if (!(t >= s) || !(t - s <= a_pow)) {
    throw DomainError(fmt::format("ode_flow: t = {} outside [s, s + a^beta] = [{}, {}]", t, s, s + a_pow));
  }
  const double base = a_pow - (t - s);
  return base <= 0.0 ? 0.0 : std::pow(base, 1.0 / beta);
}

double fw_lipschitz(double a, double beta, double gamma) {
  const double left = a * std::pow(gamma / 2.0, 1.0 / beta) / 2.0;
  return (beta - 1.0) / (beta * std::pow(left, beta));
}

std::string fw_window_violation(double a, double beta, double gamma, double delta) {
  const double horizon = (1.0 - gamma / 2.0) * std::pow(a, beta);
  const double y_end = ode_flow(0.0, a, horizon, beta);
  const double left = a * std::pow(gamma / 2.0, 1.0 / beta) / 2.0;
  if (!(left <= y_end - delta)) {
    return fmt::format("a(gamma/2)^(1/beta)/2 = {} exceeds y_(0,a)((1-gamma/2)a^beta) - delta = {}",
                       left, y_end - delta);
  }
  if (!(y_end - delta < a + delta)) {
    return "y_(0,a)((1-gamma/2)a^beta) - delta must be below y_(0,a)(0) + delta";
  }
  if (!(a + delta <= 2.0 * a)) {
    return fmt::format("y_(0,a)(0) + delta = {} exceeds 2a = {}", a + delta, 2.0 * a);
  }
  return {};
}

ProofConstants proof_constants(double a, double beta, double gamma, double epsilon,
                               int n_particles) {
  require_positive(a, "proof_constants", "a");
  if (!(beta > 2.0) || !std::isfinite(beta)) {
    throw DomainError(fmt::format("proof_constants: beta must exceed 2, got {}", beta));
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError(fmt::format("proof_constants: gamma must lie in (0,1), got {}", gamma));
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError(fmt::format("proof_constants: epsilon must lie in (0,1), got {}", epsilon));
  }
  if (n_particles < 2) {
    throw DomainError(fmt::format("proof_constants: need at least 2 particles, got {}", n_particles));
  }

  ProofConstants pc;
  pc.a = a;
  pc.beta = beta;
  pc.gamma = gamma;
  pc.epsilon = epsilon;
  pc.n_particles = n_particles;

  const double a_pow = std::pow(a, beta);
  const double shrink = std::pow(1.0 - epsilon * gamma, 1.0 / beta);
  pc.u = (1.0 - gamma) * a_pow;
  pc.delta_bar = a * (1.0 - shrink);
  pc.M = std::pow((1.0 - epsilon * gamma) / (gamma * (1.0 - epsilon)), 1.0 - 1.0 / beta);
  pc.delta_hat.resize(static_cast<std::size_t>(n_particles));
  for (int n = 1; n <= n_particles; ++n) {
    pc.delta_hat[static_cast<std::size_t>(n - 1)] =
        pc.delta_bar / std::pow(pc.M + 1.0, static_cast<double>(n_particles - n));
  }
  pc.c4 = std::pow(gamma, 1.0 / beta) + 1.0 - shrink;

  pc.time_margin_holds = (1.0 - gamma / 2.0) * std::pow(a - pc.delta_bar, beta) > pc.u;
  pc.contraction_holds = pc.c4 < 1.0;
  pc.deviation_window_holds = fw_window_violation(a, beta, gamma, pc.delta_bar).empty();
  return pc;
}

} // namespace specfun
} // namespace fvlab

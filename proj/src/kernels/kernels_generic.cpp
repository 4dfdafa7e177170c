#include <algorithm>
#include <cmath>

#include "fvlab/kernels.hpp"
#include "power.hpp"

namespace fvlab::kernels::generic {
namespace {

void bessel_step(double* x, const double* noise, const double* dt, std::size_t n, double c) {
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = x[i] + (c / x[i]) * dt[i] + std::sqrt(dt[i]) * noise[i];
  }
}

void power_step(double* x, const double* noise, const double* dt, std::size_t n, double beta,
                double barrier) {
  const double p = beta - 1.0;
  const int int_p = detail::small_integer_exponent(p);
  for (std::size_t i = 0; i < n; ++i) {
    const double drift = -1.0 / (beta * detail::pow_scalar(x[i], p, int_p));
    const double v = x[i] + drift * dt[i] + std::sqrt(dt[i]) * noise[i];
    x[i] = v > barrier ? 2.0 * barrier - v : v;
  }
}

void sqbessel_step(double* z, const double* noise, const double* dt, std::size_t n, double dim) {
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = z[i] + dim * dt[i] + (2.0 * std::sqrt(std::abs(z[i])) * std::sqrt(dt[i])) * noise[i];
  }
}

void quadratic_dt(const double* x, double* dt, std::size_t n, double cap, double kappa_eff) {
  for (std::size_t i = 0; i < n; ++i) {
    dt[i] = std::min(cap, kappa_eff * x[i] * x[i]);
  }
}

void power_dt(const double* x, double* dt, std::size_t n, double cap, double kappa, double beta) {
  const int int_beta = detail::small_integer_exponent(beta);
  for (std::size_t i = 0; i < n; ++i) {
    const double quad = kappa * x[i] * x[i];
    const double drift_bound = kappa * beta * detail::pow_scalar(x[i], beta, int_beta);
    dt[i] = std::min(cap, std::min(quad, drift_bound));
  }
}

void linear_dt(const double* z, double* dt, std::size_t n, double cap, double kappa) {
  for (std::size_t i = 0; i < n; ++i) {
    dt[i] = std::min(cap, kappa * std::abs(z[i]));
  }
}

double sum_squares(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += x[i] * x[i];
  }
  return s;
}

double min_value(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) {
    m = std::min(m, x[i]);
  }
  return m;
}

double max_value(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) {
    m = std::max(m, x[i]);
  }
  return m;
}

} // namespace

const KernelTable table = {Isa::generic, bessel_step,  power_step,  sqbessel_step,
                           quadratic_dt, power_dt,     linear_dt,   sum_squares,
                           min_value,    max_value};

} // namespace fvlab::kernels::generic

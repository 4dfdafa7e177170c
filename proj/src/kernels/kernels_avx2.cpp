#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "fvlab/kernels.hpp"
#include "power.hpp"

// Built with -mavx2 only. Arithmetic follows the generic kernels operation
// for operation, so results are bit-identical except for the order of the
// sum_squares reduction.

namespace fvlab::kernels::avx2 {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

inline __m256d ipow_pd(__m256d base, int e) {
  __m256d result = _mm256_set1_pd(1.0);
  while (e > 0) {
    if (e & 1) {
      result = _mm256_mul_pd(result, base);
    }
    e >>= 1;
    if (e > 0) {
      base = _mm256_mul_pd(base, base);
    }
  }
  return result;
}

inline __m256d pow_pd(__m256d base, double p, int int_p) {
  if (int_p > 0) {
    return ipow_pd(base, int_p);
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, base);
  for (double& v : lanes) {
    v = std::pow(v, p);
  }
  return _mm256_load_pd(lanes);
}

void bessel_step(double* x, const double* noise, const double* dt, std::size_t n, double c) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vdt = _mm256_loadu_pd(dt + i);
    const __m256d vz = _mm256_loadu_pd(noise + i);
    const __m256d drift = _mm256_mul_pd(_mm256_div_pd(vc, vx), vdt);
    const __m256d diffusion = _mm256_mul_pd(_mm256_sqrt_pd(vdt), vz);
    _mm256_storeu_pd(x + i, _mm256_add_pd(_mm256_add_pd(vx, drift), diffusion));
  }
  for (; i < n; ++i) {
    x[i] = x[i] + (c / x[i]) * dt[i] + std::sqrt(dt[i]) * noise[i];
  }
}

void power_step(double* x, const double* noise, const double* dt, std::size_t n, double beta,
                double barrier) {
  const double p = beta - 1.0;
  const int int_p = detail::small_integer_exponent(p);
  const __m256d vbeta = _mm256_set1_pd(beta);
  const __m256d vone = _mm256_set1_pd(1.0);
  const __m256d vbar = _mm256_set1_pd(barrier);
  const __m256d vtwobar = _mm256_set1_pd(2.0 * barrier);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vdt = _mm256_loadu_pd(dt + i);
    const __m256d vz = _mm256_loadu_pd(noise + i);
    const __m256d denom = _mm256_mul_pd(vbeta, pow_pd(vx, p, int_p));
    const __m256d drift = _mm256_sub_pd(_mm256_setzero_pd(), _mm256_div_pd(vone, denom));
    const __m256d v = _mm256_add_pd(_mm256_add_pd(vx, _mm256_mul_pd(drift, vdt)),
                                    _mm256_mul_pd(_mm256_sqrt_pd(vdt), vz));
    const __m256d above = _mm256_cmp_pd(v, vbar, _CMP_GT_OQ);
    _mm256_storeu_pd(x + i, _mm256_blendv_pd(v, _mm256_sub_pd(vtwobar, v), above));
  }
  for (; i < n; ++i) {
    const double drift = -1.0 / (beta * detail::pow_scalar(x[i], p, int_p));
    const double v = x[i] + drift * dt[i] + std::sqrt(dt[i]) * noise[i];
    x[i] = v > barrier ? 2.0 * barrier - v : v;
  }
}

void sqbessel_step(double* z, const double* noise, const double* dt, std::size_t n, double dim) {
  const __m256d vdim = _mm256_set1_pd(dim);
  const __m256d vtwo = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vzv = _mm256_loadu_pd(z + i);
    const __m256d vdt = _mm256_loadu_pd(dt + i);
    const __m256d vw = _mm256_loadu_pd(noise + i);
    const __m256d scale =
        _mm256_mul_pd(_mm256_mul_pd(vtwo, _mm256_sqrt_pd(abs_pd(vzv))), _mm256_sqrt_pd(vdt));
    _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_add_pd(vzv, _mm256_mul_pd(vdim, vdt)),
                                          _mm256_mul_pd(scale, vw)));
  }
  for (; i < n; ++i) {
    z[i] = z[i] + dim * dt[i] + (2.0 * std::sqrt(std::abs(z[i])) * std::sqrt(dt[i])) * noise[i];
  }
}

void quadratic_dt(const double* x, double* dt, std::size_t n, double cap, double kappa_eff) {
  const __m256d vcap = _mm256_set1_pd(cap);
  const __m256d vk = _mm256_set1_pd(kappa_eff);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d q = _mm256_mul_pd(_mm256_mul_pd(vk, vx), vx);
    _mm256_storeu_pd(dt + i, _mm256_min_pd(q, vcap));
  }
  for (; i < n; ++i) {
    dt[i] = std::min(cap, kappa_eff * x[i] * x[i]);
  }
}

void power_dt(const double* x, double* dt, std::size_t n, double cap, double kappa, double beta) {
  const int int_beta = detail::small_integer_exponent(beta);
  const __m256d vcap = _mm256_set1_pd(cap);
  const __m256d vk = _mm256_set1_pd(kappa);
  const __m256d vkb = _mm256_set1_pd(kappa * beta);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d quad = _mm256_mul_pd(_mm256_mul_pd(vk, vx), vx);
    const __m256d bound = _mm256_mul_pd(vkb, pow_pd(vx, beta, int_beta));
    _mm256_storeu_pd(dt + i, _mm256_min_pd(_mm256_min_pd(bound, quad), vcap));
  }
  for (; i < n; ++i) {
    const double quad = kappa * x[i] * x[i];
    const double drift_bound = kappa * beta * detail::pow_scalar(x[i], beta, int_beta);
    dt[i] = std::min(cap, std::min(quad, drift_bound));
  }
}

void linear_dt(const double* z, double* dt, std::size_t n, double cap, double kappa) {
  const __m256d vcap = _mm256_set1_pd(cap);
  const __m256d vk = _mm256_set1_pd(kappa);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_mul_pd(vk, abs_pd(_mm256_loadu_pd(z + i)));
    _mm256_storeu_pd(dt + i, _mm256_min_pd(v, vcap));
  }
  for (; i < n; ++i) {
    dt[i] = std::min(cap, kappa * std::abs(z[i]));
  }
}

inline double hsum(__m256d v) {
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double sum_squares(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    s += x[i] * x[i];
  }
  return s;
}

double min_value(const double* x, std::size_t n) {
  double m = x[0];
  std::size_t i = 0;
  if (n >= kLanes) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = kLanes; i + kLanes <= n; i += kLanes) {
      acc = _mm256_min_pd(acc, _mm256_loadu_pd(x + i));
    }
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, acc);
    m = std::min(std::min(lanes[0], lanes[1]), std::min(lanes[2], lanes[3]));
  }
  for (; i < n; ++i) {
    m = std::min(m, x[i]);
  }
  return m;
}

double max_value(const double* x, std::size_t n) {
  double m = x[0];
  std::size_t i = 0;
  if (n >= kLanes) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = kLanes; i + kLanes <= n; i += kLanes) {
      acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    }
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, acc);
    m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  }
  for (; i < n; ++i) {
    m = std::max(m, x[i]);
  }
  return m;
}

} // namespace

const KernelTable table = {Isa::avx2,    bessel_step, power_step, sqbessel_step,
                           quadratic_dt, power_dt,    linear_dt,  sum_squares,
                           min_value,    max_value};

} // namespace fvlab::kernels::avx2

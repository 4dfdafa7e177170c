#pragma once

// Data-parallel inner loops of the path simulators. Every kernel has a
// scalar reference (generic) and, on x86-64, an AVX2 variant; the active
// table is picked once at startup from the CPU features. FVLAB_ISA=generic
// in the environment forces the scalar table.
//
// Lanes are independent: lane i reads x[i], noise[i], dt[i] only.

#include <cstddef>
#include <span>
#include <string_view>

namespace fvlab::kernels {

enum class Isa { generic, avx2 };

struct KernelTable {
  Isa isa;
  // x += (c / x) dt + sqrt(dt) noise
  void (*bessel_step)(double* x, const double* noise, const double* dt, std::size_t n, double c);
  // x += -dt / (beta x^(beta-1)) + sqrt(dt) noise, then mirror at barrier
  void (*power_step)(double* x, const double* noise, const double* dt, std::size_t n, double beta,
                     double barrier);
  // z += dim dt + 2 sqrt(|z|) sqrt(dt) noise
  void (*sqbessel_step)(double* z, const double* noise, const double* dt, std::size_t n,
                        double dim);
  // dt = min(cap, kappa_eff x^2), kappa_eff folds in the drift bound
  void (*quadratic_dt)(const double* x, double* dt, std::size_t n, double cap, double kappa_eff);
  // dt = min(cap, kappa x^2, kappa beta x^beta)
  void (*power_dt)(const double* x, double* dt, std::size_t n, double cap, double kappa,
                   double beta);
  // dt = min(cap, kappa |z|)
  void (*linear_dt)(const double* z, double* dt, std::size_t n, double cap, double kappa);
  double (*sum_squares)(const double* x, std::size_t n);
  double (*min_value)(const double* x, std::size_t n);
  double (*max_value)(const double* x, std::size_t n);
};

namespace generic {
extern const KernelTable table;
}
#if defined(FVLAB_HAVE_AVX2)
namespace avx2 {
extern const KernelTable table;
}
#endif

/// Table for a given ISA, or nullptr when it is not compiled in or the CPU
/// lacks it.
const KernelTable* table_for(Isa isa);

/// Table selected for this process.
const KernelTable& active();

std::string_view isa_name(Isa isa);

// Span front-ends over the active table.
void bessel_step(std::span<double> x, std::span<const double> noise, std::span<const double> dt,
                 double drift_coef);
void power_step(std::span<double> x, std::span<const double> noise, std::span<const double> dt,
                double beta, double barrier);
void sqbessel_step(std::span<double> z, std::span<const double> noise,
                   std::span<const double> dt, double dim);
double sum_squares(std::span<const double> x);
double min_value(std::span<const double> x);
double max_value(std::span<const double> x);

} // namespace fvlab::kernels

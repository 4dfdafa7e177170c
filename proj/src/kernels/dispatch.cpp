#include <cassert>
#include <cstdlib>
#include <string_view>

#include "fvlab/kernels.hpp"

namespace fvlab::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(FVLAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select_table() {
  const char* forced = std::getenv("FVLAB_ISA");
  if (forced != nullptr && std::string_view(forced) == "generic") {
    return generic::table;
  }
  if (const KernelTable* t = table_for(Isa::avx2)) {
    return *t;
  }
  return generic::table;
}

} // namespace

const KernelTable* table_for(Isa isa) {
  switch (isa) {
  case Isa::generic:
    return &generic::table;
  case Isa::avx2:
#if defined(FVLAB_HAVE_AVX2)
    if (cpu_has_avx2()) {
      return &avx2::table;
    }
#endif
    return nullptr;
  }
  return nullptr;
}

const KernelTable& active() {
  static const KernelTable& table = select_table();
  return table;
}

std::string_view isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "generic";
}

void bessel_step(std::span<double> x, std::span<const double> noise, std::span<const double> dt,
                 double drift_coef) {
  assert(noise.size() >= x.size() && dt.size() >= x.size());
  active().bessel_step(x.data(), noise.data(), dt.data(), x.size(), drift_coef);
}

void power_step(std::span<double> x, std::span<const double> noise, std::span<const double> dt,
                double beta, double barrier) {
  assert(noise.size() >= x.size() && dt.size() >= x.size());
  active().power_step(x.data(), noise.data(), dt.data(), x.size(), beta, barrier);
}

void sqbessel_step(std::span<double> z, std::span<const double> noise,
                   std::span<const double> dt, double dim) {
  assert(noise.size() >= z.size() && dt.size() >= z.size());
  active().sqbessel_step(z.data(), noise.data(), dt.data(), z.size(), dim);
}

double sum_squares(std::span<const double> x) {
  return active().sum_squares(x.data(), x.size());
}

double min_value(std::span<const double> x) {
  assert(!x.empty());
  return active().min_value(x.data(), x.size());
}

double max_value(std::span<const double> x) {
  assert(!x.empty());
  return active().max_value(x.data(), x.size());
}

} // namespace fvlab::kernels

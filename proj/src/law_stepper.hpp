#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <variant>

#include "fvlab/kernels.hpp"
#include "fvlab/paths.hpp"

namespace fvlab::detail {

// Binds a drift law to the active kernel table: adaptive step sizes and one
// Euler step over a block of lanes.
class LawStepper {
public:
  LawStepper(const DriftLaw& law, double kappa, bool reflect = true)
      : table_(kernels::active()), kappa_(kappa) {
    if (const auto* b = std::get_if<BesselLaw>(&law)) {
      kind_ = Kind::bessel;
      param_ = 0.5 * (b->nu - 1.0);
      const double c = std::abs(param_);
      kappa_eff_ = c > 1.0 ? kappa / c : kappa;
    } else if (const auto* p = std::get_if<PowerDriftReflected>(&law)) {
      kind_ = Kind::power;
      param_ = p->beta;
      barrier_ = reflect ? PowerDriftReflected::kBarrier : std::numeric_limits<double>::infinity();
    } else {
      kind_ = Kind::sqbessel;
      param_ = std::get<SquaredBesselLaw>(law).dim;
    }
  }

  void step_sizes(std::span<const double> x, std::span<double> dt, double cap) const {
    switch (kind_) {
    case Kind::bessel:
      table_.quadratic_dt(x.data(), dt.data(), x.size(), cap, kappa_eff_);
      break;
    case Kind::power:
      table_.power_dt(x.data(), dt.data(), x.size(), cap, kappa_, param_);
      break;
    case Kind::sqbessel:
      table_.linear_dt(x.data(), dt.data(), x.size(), cap, kappa_);
      break;
    }
  }

  void step(std::span<double> x, std::span<const double> noise, std::span<const double> dt) const {
    switch (kind_) {
    case Kind::bessel:
      table_.bessel_step(x.data(), noise.data(), dt.data(), x.size(), param_);
      break;
    case Kind::power:
      table_.power_step(x.data(), noise.data(), dt.data(), x.size(), param_, barrier_);
      break;
    case Kind::sqbessel:
      table_.sqbessel_step(x.data(), noise.data(), dt.data(), x.size(), param_);
      break;
    }
  }

  const kernels::KernelTable& table() const { return table_; }

private:
  enum class Kind { bessel, power, sqbessel };
  const kernels::KernelTable& table_;
  Kind kind_ = Kind::bessel;
  double param_ = 0.0;
  double kappa_ = 0.01;
  double kappa_eff_ = 0.01;
  double barrier_ = std::numeric_limits<double>::infinity();
};

// Fraction of the step at which a lane moving from x_old to x_new crosses eps.
inline double crossing_fraction(double x_old, double x_new, double eps) {
  if (!(x_old > eps)) {
    return 0.0;
  }
  const double f = (x_old - eps) / (x_old - x_new);
  return f < 0.0 ? 0.0 : (f > 1.0 ? 1.0 : f);
}

} // namespace fvlab::detail

#include "fvlab/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <fmt/format.h>

#include "fvlab/error.hpp"
#include "fvlab/specfun.hpp"
#include "law_stepper.hpp"

namespace fvlab {

void PathConfig::validate() const {
  if (!(dt_base > 0.0) || !std::isfinite(dt_base)) {
    throw DomainError(fmt::format("path config: dt_base must be positive, got {}", dt_base));
  }
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw DomainError(fmt::format("path config: kappa must be positive, got {}", kappa));
  }
  if (!(eps_abs > 0.0 && eps_abs < 1.0)) {
    throw DomainError(fmt::format("path config: eps_abs must lie in (0,1), got {}", eps_abs));
  }
  if (!(horizon > 0.0)) {
    throw DomainError(fmt::format("path config: horizon must be positive, got {}", horizon));
  }
}

void validate_start(const DriftLaw& law, double x0) {
  if (!std::isfinite(x0)) {
    throw DomainError("start value must be finite");
  }
  if (const auto* b = std::get_if<BesselLaw>(&law)) {
    if (!std::isfinite(b->nu)) {
      throw DomainError("Bessel law: nu must be finite");
    }
    if (!(x0 > 0.0)) {
      throw DomainError(fmt::format("Bessel law lives on (0, inf), got x0 = {}", x0));
    }
  } else if (const auto* p = std::get_if<PowerDriftReflected>(&law)) {
    if (!(p->beta > 2.0) || !std::isfinite(p->beta)) {
      throw DomainError(fmt::format("power-drift law needs beta > 2, got {}", p->beta));
    }
    if (!(x0 > 0.0 && x0 <= PowerDriftReflected::kBarrier)) {
      throw DomainError(fmt::format("power-drift law lives on (0, 2], got x0 = {}", x0));
    }
  } else {
    const auto& q = std::get<SquaredBesselLaw>(law);
    if (!std::isfinite(q.dim)) {
      throw DomainError("squared Bessel law: dimension must be finite");
    }
    if (!(x0 >= 0.0)) {
      throw DomainError(fmt::format("squared Bessel law lives on [0, inf), got x0 = {}", x0));
    }
  }
}

double reflect_upper(double value, double barrier) {
  return value > barrier ? 2.0 * barrier - value : value;
}

namespace {

// Steps shorter than half an ulp of t would leave the clock unchanged.
double strictly_after(double t, double candidate) {
  return candidate > t ? candidate : std::nextafter(t, std::numeric_limits<double>::infinity());
}

// Lockstep Euler driver over independent lanes. Lanes leave the block when
// absorbed, at the horizon, or when hooks.on_step returns false; the block
// is compacted stably so lane order (and therefore draw order from shared
// sources) is deterministic.
template <class Hooks>
void run_lanes(const detail::LawStepper& stepper, double x0, const PathConfig& config,
               double dt_cap, double horizon, std::span<RandomSource* const> sources,
               Hooks& hooks) {
  const std::size_t count = sources.size();
  std::vector<double> x(count, x0), x_old(count), t(count, 0.0), dt(count), noise(count);
  std::vector<std::size_t> id(count);
  std::vector<char> last(count);
  for (std::size_t i = 0; i < count; ++i) {
    id[i] = i;
  }
  std::size_t n = count;
  if (!(x0 > config.eps_abs)) {
    for (std::size_t i = 0; i < count; ++i) {
      hooks.on_absorbed(i, 0.0);
    }
    return;
  }

  while (n > 0) {
    const std::span<double> xs(x.data(), n);
    stepper.step_sizes(xs, std::span<double>(dt.data(), n), dt_cap);
    for (std::size_t i = 0; i < n; ++i) {
      const double remaining = horizon - t[i];
      last[i] = dt[i] >= remaining;
      if (last[i]) {
        dt[i] = remaining;
      }
      noise[i] = sources[id[i]]->normal();
    }
    std::copy_n(x.begin(), n, x_old.begin());
    stepper.step(xs, std::span<const double>(noise.data(), n), std::span<const double>(dt.data(), n));

    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bool keep = true;
      if (x[i] <= config.eps_abs) {
        const double f = detail::crossing_fraction(x_old[i], x[i], config.eps_abs);
        hooks.on_absorbed(id[i], strictly_after(t[i], t[i] + f * dt[i]));
        keep = false;
      } else {
        t[i] = last[i] ? horizon : strictly_after(t[i], t[i] + dt[i]);
        keep = hooks.on_step(id[i], t[i], x[i]);
        if (keep && last[i]) {
          hooks.on_horizon(id[i]);
          keep = false;
        }
      }
      if (keep) {
        x[kept] = x[i];
        t[kept] = t[i];
        id[kept] = id[i];
        ++kept;
      }
    }
    n = kept;
  }
}

struct RecordingHooks {
  Path* path;
  double eps;
  void on_absorbed(std::size_t, double time) {
    path->times.push_back(time);
    path->values.push_back(eps);
    path->terminal = Absorbed{time};
  }
  bool on_step(std::size_t, double time, double value) {
    path->times.push_back(time);
    path->values.push_back(value);
    return true;
  }
  void on_horizon(std::size_t) { path->terminal = HorizonReached{}; }
};

struct AbsorptionHooks {
  std::vector<double>* times;
  void on_absorbed(std::size_t id, double time) { (*times)[id] = time; }
  bool on_step(std::size_t, double, double) { return true; }
  void on_horizon(std::size_t) {}
};

} // namespace

Path simulate(const DriftLaw& law, double x0, const PathConfig& config, RandomSource& rng) {
  config.validate();
  validate_start(law, x0);
  Path path;
  path.times.push_back(0.0);
  path.values.push_back(x0);
  if (!(x0 > config.eps_abs)) {
    path.terminal = Absorbed{0.0};
    return path;
  }
  const detail::LawStepper stepper(law, config.kappa);
  RandomSource* const source[1] = {&rng};
  RecordingHooks hooks{&path, config.eps_abs};
  run_lanes(stepper, x0, config, config.dt_base, config.horizon, source, hooks);
  return path;
}

std::vector<double> absorption_times(const DriftLaw& law, double x0, const PathConfig& config,
                                     std::span<RandomSource* const> sources) {
  config.validate();
  validate_start(law, x0);
  std::vector<double> times(sources.size(), std::numeric_limits<double>::infinity());
  const detail::LawStepper stepper(law, config.kappa);
  AbsorptionHooks hooks{&times};
  run_lanes(stepper, x0, config, config.dt_base, config.horizon, sources, hooks);
  return times;
}

std::vector<double> absorption_times(const DriftLaw& law, double x0, const PathConfig& config,
                                     std::uint64_t seed, std::uint64_t first_stream,
                                     std::size_t count) {
  std::vector<std::unique_ptr<RngStream>> streams;
  std::vector<RandomSource*> sources;
  streams.reserve(count);
  sources.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    streams.push_back(std::make_unique<RngStream>(seed, first_stream + i));
    sources.push_back(streams.back().get());
  }
  return absorption_times(law, x0, config, sources);
}

double fw_gaussian_bound(double a, double beta, double gamma, double delta) {
  const double horizon = (1.0 - gamma / 2.0) * std::pow(a, beta);
  const double lipschitz = specfun::fw_lipschitz(a, beta, gamma);
  const double threshold = delta * std::exp(-lipschitz * horizon);
  // 4 P(N(0, T) > threshold) = 2 erfc(threshold / sqrt(2T))
  return 2.0 * std::erfc(threshold / std::sqrt(2.0 * horizon));
}

namespace {

struct DeviationHooks {
  double a;
  double beta;
  double delta;
  std::size_t exceed = 0;
  void on_absorbed(std::size_t, double) { ++exceed; }
  bool on_step(std::size_t, double time, double value) {
    if (std::abs(value - specfun::ode_flow(0.0, a, time, beta)) > delta) {
      ++exceed;
      return false;
    }
    return true;
  }
  void on_horizon(std::size_t) {}
};

} // namespace

FwCheckResult fw_deviation_check(double a, double beta, double gamma, double delta,
                                 std::size_t n_reps, const PathConfig& config,
                                 RandomSource& rng) {
  config.validate();
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw DomainError(fmt::format("fw check: a must be positive, got {}", a));
  }
  if (!(beta > 2.0) || !std::isfinite(beta)) {
    throw DomainError(fmt::format("fw check: beta must exceed 2, got {}", beta));
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError(fmt::format("fw check: gamma must lie in (0,1), got {}", gamma));
  }
  if (!(delta > 0.0)) {
    throw DomainError(fmt::format("fw check: delta must be positive, got {}", delta));
  }
  if (n_reps == 0) {
    throw DomainError("fw check: n_reps must be positive");
  }
  if (const std::string why = specfun::fw_window_violation(a, beta, gamma, delta); !why.empty()) {
    throw DomainError("fw check: delta too large: " + why);
  }

  FwCheckResult r;
  r.a = a;
  r.beta = beta;
  r.gamma = gamma;
  r.delta = delta;
  r.lipschitz_L = specfun::fw_lipschitz(a, beta, gamma);
  r.horizon = (1.0 - gamma / 2.0) * std::pow(a, beta);
  r.n_reps = n_reps;
  r.bound = fw_gaussian_bound(a, beta, gamma, delta);

  // Unreflected drift: the window keeps the flow inside [a(gamma/2)^(1/beta)/2, 2a].
  const detail::LawStepper stepper(PowerDriftReflected{beta}, config.kappa, /*reflect=*/false);
  const std::vector<RandomSource*> sources(n_reps, &rng);
  DeviationHooks hooks{a, beta, delta};
  const double dt_cap = std::min(config.dt_base, r.horizon / 1000.0);
  // Below the window's left end every path has already deviated by delta.
  PathConfig inner = config;
  inner.eps_abs = std::min(config.eps_abs, 0.25 * a * std::pow(gamma / 2.0, 1.0 / beta));
  run_lanes(stepper, a, inner, dt_cap, r.horizon, sources, hooks);

  r.exceedances = hooks.exceed;
  r.empirical_prob = static_cast<double>(hooks.exceed) / static_cast<double>(n_reps);
  r.standard_error =
      std::sqrt(r.empirical_prob * (1.0 - r.empirical_prob) / static_cast<double>(n_reps));
  return r;
}

} // namespace fvlab

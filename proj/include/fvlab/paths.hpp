#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "fvlab/random.hpp"

namespace fvlab {

struct PathConfig {
  double dt_base = 1e-3;  // largest step
  double kappa = 0.01;    // adaptive-step coefficient
  double eps_abs = 1e-6;  // absorption threshold
  double horizon = 1e3;

  void validate() const;
};

/// Bessel process of dimension nu on (0, inf): drift (nu-1)/(2x), unit noise.
struct BesselLaw {
  double nu = 0.0;
};

/// Power-drift diffusion on (0, 2], drift -1/(beta x^(beta-1)), mirrored at 2.
struct PowerDriftReflected {
  double beta = 3.0;
  static constexpr double kBarrier = 2.0;
};

/// Squared Bessel process: dZ = dim dt + 2 sqrt(|Z|) dW.
struct SquaredBesselLaw {
  double dim = 0.0;
};

using DriftLaw = std::variant<BesselLaw, PowerDriftReflected, SquaredBesselLaw>;

/// Throws DomainError when x0 is outside the law's state space or the law's
/// parameter is invalid.
void validate_start(const DriftLaw& law, double x0);

struct Absorbed {
  double time = 0.0;
};
struct HorizonReached {};
using Terminal = std::variant<Absorbed, HorizonReached>;

struct Path {
  std::vector<double> times;
  std::vector<double> values;
  Terminal terminal = HorizonReached{};

  bool absorbed() const { return std::holds_alternative<Absorbed>(terminal); }
};

/// Euler-Maruyama path. Singular-drift laws use dt = min(dt_base, kappa x^2,
/// kappa x/|b(x)|); the squared Bessel law uses dt = min(dt_base, kappa |z|).
/// A value at or below eps_abs absorbs the path; the crossing time is
/// linearly interpolated within the step and the last value is eps_abs.
Path simulate(const DriftLaw& law, double x0, const PathConfig& config, RandomSource& rng);

/// Returns value if value <= barrier, otherwise its mirror image 2 barrier - value.
double reflect_upper(double value, double barrier);

/// Absorption times of independent replicas, one random source per replica,
/// stepped in lockstep through the SIMD kernels. Entry i equals the Absorbed
/// time of simulate(law, x0, config, *sources[i]) bit for bit, or +inf when
/// the replica reaches the horizon.
std::vector<double> absorption_times(const DriftLaw& law, double x0, const PathConfig& config,
                                     std::span<RandomSource* const> sources);

/// Convenience overload: replica i uses RngStream(seed, first_stream + i).
std::vector<double> absorption_times(const DriftLaw& law, double x0, const PathConfig& config,
                                     std::uint64_t seed, std::uint64_t first_stream,
                                     std::size_t count);

struct FwCheckResult {
  double a = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double lipschitz_L = 0.0;
  double horizon = 0.0;  // (1 - gamma/2) a^beta
  std::size_t n_reps = 0;
  std::size_t exceedances = 0;
  double empirical_prob = 0.0;
  double standard_error = 0.0;  // sqrt(p(1-p)/n)
  double bound = 0.0;           // 4 P(N(0, T) > delta e^(-L T))
};

/// Deviation of dX = dW + b(X) dt, X_0 = a, from the flow y_(0,a) over
/// [0, (1-gamma/2) a^beta], against the Gaussian-tail bound. The supremum is
/// taken over the simulation grid (step at most horizon/1000); absorption
/// counts as an exceedance. When eps_abs lies above a (gamma/2)^(1/beta) / 4
/// the absorption threshold is lowered to that value. Throws DomainError
/// naming the failing window inequality when delta is too large.
FwCheckResult fw_deviation_check(double a, double beta, double gamma, double delta,
                                 std::size_t n_reps, const PathConfig& config, RandomSource& rng);

/// The explicit bound alone.
double fw_gaussian_bound(double a, double beta, double gamma, double delta);

} // namespace fvlab

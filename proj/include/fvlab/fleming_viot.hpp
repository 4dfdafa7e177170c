#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fvlab/paths.hpp"
#include "fvlab/random.hpp"

namespace fvlab {

struct SystemState {
  std::vector<double> positions;
  double time = 0.0;
  std::uint64_t event_count = 0;
};

/// One jump. Particle labels are 1-based: dying and target lie in [1, N].
struct EventRecord {
  double tau = 0.0;
  int dying = 0;
  int target = 0;
};

struct ExtinctionThresholds {
  std::size_t window_events = 100;  // m
  double window_time = 1e-9;        // w_min
  double pos_min = 1e-4;
  std::uint64_t max_events = 1'000'000;  // K_max
};

struct Extinct {
  double tau_inf_estimate = 0.0;
  bool degenerate_step = false;  // every particle crossed eps_abs in one step
};
struct Survived {
  double horizon = 0.0;
  bool event_cap = false;
};
struct Continue {};

using Classification = std::variant<Extinct, Survived>;
using Verdict = std::variant<Continue, Extinct, Survived>;

/// Extinct when the last m events span less than w_min and every particle
/// sits below pos_min; Survived once the horizon or the event cap is hit;
/// Continue otherwise.
Verdict classify_extinction(const SystemState& state, std::span<const EventRecord> events,
                            const ExtinctionThresholds& thresholds, double horizon);

struct RunOutcome {
  std::vector<EventRecord> events;
  Classification classification = Survived{};
  double max_position_at_end = 0.0;
  SystemState final_state;

  bool extinct() const { return std::holds_alternative<Extinct>(classification); }
};

/// Per-step hook into the particle engine. x_continuous holds the positions
/// after the diffusion step and before any relocation.
class StepObserver {
public:
  virtual ~StepObserver() = default;
  /// Upper bound the observer imposes on the next step.
  virtual double max_step() const { return std::numeric_limits<double>::infinity(); }
  virtual void on_step(double t_new, double dt, std::span<const double> x_before,
                       std::span<const double> x_continuous, std::span<const double> x_after,
                       bool had_events) = 0;
};

/// N-particle Fleming-Viot system. Between events particles move
/// independently under `law` (Bessel or reflected power drift) with a common
/// step, the smallest adaptive step among them. A particle at or below
/// eps_abs jumps onto a uniformly chosen particle strictly above it; several
/// crossings within one step are handled in increasing label order. If all
/// particles cross in the same step the run is classified Extinct.
RunOutcome fv_simulate(std::span<const double> x0, const DriftLaw& law, const PathConfig& config,
                       RandomSource& rng, const ExtinctionThresholds& thresholds = {},
                       StepObserver* observer = nullptr);

struct JumpPair {
  double sigma = 0.0;  // first absorption time of the pair
  double alpha = 0.0;  // survivor's position at that time
};

/// One (sigma_1, alpha_1) draw: two independent Bessel(nu) paths from 1,
/// stepped together until the first absorption. Returns nullopt when neither
/// path is absorbed before time_cap.
std::optional<JumpPair> alpha_from_paths(double nu, const PathConfig& config, RandomSource& rng,
                                         double time_cap);
std::optional<JumpPair> alpha_from_paths(double nu, const PathConfig& config, RandomSource& rng);

struct ScalingRun {
  std::vector<double> alphas;
  std::vector<double> sigmas;
  std::vector<double> xis;           // xis[j-1] = alpha_1 ... alpha_j
  std::vector<double> partial_sums;  // partial_sums[n-1] = tau_n
  bool converged = false;
  bool horizon_reached = false;
};

/// Pair supplier for the scaling construction. Receives the largest sigma
/// that keeps tau_n within the horizon; returns nullopt if it is exceeded.
using PairSource = std::function<std::optional<JumpPair>(double sigma_cap)>;

/// tau_n = sum_j xi_(j-1)^2 sigma_j from supplied pairs. Converged once
/// xi_n^2 sigma_(n+1) < 1e-12 tau_n for 20 consecutive n (the run stops
/// there). Stops unconverged when tau_n exceeds horizon.
ScalingRun accumulate_scaling(const PairSource& next_pair, std::size_t n_events, double horizon);

/// Two-particle system built from the scaling construction with pairs drawn
/// by alpha_from_paths. config.horizon bounds tau_n.
ScalingRun fv_two_particle_scaling(double nu, std::size_t n_events, const PathConfig& config,
                                   RandomSource& rng);

struct CouplingResult {
  Path fv_z;       // Z_t = sum of squared positions of the particle system
  Path coupled_z;  // squared Bessel process of dimension N nu driven by B
  bool domination_holds = true;
  double max_violation = 0.0;     // max over the grid of coupled_z - fv_z
  bool dimension_warning = false; // N nu < 2: no domination claim
  Classification classification = Survived{};
  std::size_t event_count = 0;
};

/// Runs the particle system for Bessel(nu) to `horizon`, rebuilds the
/// Brownian driver B from the continuous increments of Y = sqrt(Z),
///   dB = dY - (N nu - 1)/(2Y) dt,
/// and integrates the (N nu)-dimensional process with the same B from the
/// same start. domination_holds is coupled_z <= fv_z + 10 dt_base at every
/// grid time.
CouplingResult sum_of_squares_coupling(std::span<const double> x0, double nu, double horizon,
                                       const PathConfig& config, RandomSource& rng,
                                       const ExtinctionThresholds& thresholds = {});

} // namespace fvlab

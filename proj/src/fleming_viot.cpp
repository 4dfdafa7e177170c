#include "fvlab/fleming_viot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fvlab/error.hpp"
#include "fvlab/specfun.hpp"
#include "law_stepper.hpp"

namespace fvlab {

namespace {

void validate_thresholds(const ExtinctionThresholds& t) {
  if (t.window_events == 0) {
    throw DomainError("extinction thresholds: window_events must be positive");
  }
  if (!(t.window_time > 0.0)) {
    throw DomainError("extinction thresholds: window_time must be positive");
  }
  if (!(t.pos_min > 0.0)) {
    throw DomainError("extinction thresholds: pos_min must be positive");
  }
  if (t.max_events == 0) {
    throw DomainError("extinction thresholds: max_events must be positive");
  }
}

} // namespace

Verdict classify_extinction(const SystemState& state, std::span<const EventRecord> events,
                            const ExtinctionThresholds& thresholds, double horizon) {
  const std::size_t m = thresholds.window_events;
  if (m > 0 && events.size() >= m) {
    const double span = events.back().tau - events[events.size() - m].tau;
    const double top = state.positions.empty()
                           ? 0.0
                           : *std::max_element(state.positions.begin(), state.positions.end());
    if (span < thresholds.window_time && top < thresholds.pos_min) {
      return Extinct{events.back().tau, false};
    }
  }
  if (state.event_count >= thresholds.max_events) {
    return Survived{state.time, true};
  }
  if (state.time >= horizon) {
    return Survived{horizon, false};
  }
  return Continue{};
}

RunOutcome fv_simulate(std::span<const double> x0, const DriftLaw& law, const PathConfig& config,
                       RandomSource& rng, const ExtinctionThresholds& thresholds,
                       StepObserver* observer) {
  config.validate();
  validate_thresholds(thresholds);
  if (std::holds_alternative<SquaredBesselLaw>(law)) {
    throw DomainError("particle system needs a Bessel or power-drift law");
  }
  const std::size_t n = x0.size();
  if (n < 2) {
    throw DomainError(fmt::format("particle system needs N >= 2, got {}", n));
  }
  for (const double v : x0) {
    validate_start(law, v);
    if (!(v > config.eps_abs)) {
      throw DomainError(fmt::format("start value {} is not above eps_abs", v));
    }
  }

  const detail::LawStepper stepper(law, config.kappa);
  const kernels::KernelTable& k = stepper.table();
  const double eps = config.eps_abs;

  RunOutcome out;
  SystemState& s = out.final_state;
  s.positions.assign(x0.begin(), x0.end());
  std::vector<double> before(n), cont(n), dt(n), noise(n), alive(n);
  std::vector<std::size_t> candidates;
  candidates.reserve(n);
  double last_tau = 0.0;

  for (;;) {
    std::span<double> x(s.positions);
    stepper.step_sizes(x, dt, config.dt_base);
    double h = k.min_value(dt.data(), n);
    if (observer != nullptr) {
      h = std::min(h, observer->max_step());
    }
    const double remaining = config.horizon - s.time;
    const bool last = h >= remaining;
    if (last) {
      h = remaining;
    }
    std::fill(dt.begin(), dt.end(), h);
    for (std::size_t i = 0; i < n; ++i) {
      noise[i] = rng.normal();
    }
    std::copy(x.begin(), x.end(), before.begin());
    stepper.step(x, noise, dt);
    std::copy(x.begin(), x.end(), cont.begin());

    bool any_crossed = false;
    bool all_crossed = true;
    double latest = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] <= eps) {
        any_crossed = true;
        latest = std::max(latest, s.time + detail::crossing_fraction(before[i], x[i], eps) * h);
      } else {
        all_crossed = false;
      }
    }
    if (all_crossed) {
      s.time = latest;
      std::fill(x.begin(), x.end(), eps);
      out.classification = Extinct{latest, true};
      break;
    }

    if (any_crossed) {
      for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > eps) {
          continue;
        }
        candidates.clear();
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i && x[j] > eps) {
            candidates.push_back(j);
          }
        }
        const std::size_t target = candidates[rng.uniform_index(candidates.size())];
        double tau = s.time + detail::crossing_fraction(before[i], cont[i], eps) * h;
        if (!(tau > last_tau)) {
          tau = std::nextafter(last_tau, std::numeric_limits<double>::infinity());
        }
        last_tau = tau;
        x[i] = x[target];
        out.events.push_back(
            EventRecord{tau, static_cast<int>(i + 1), static_cast<int>(target + 1)});
        ++s.event_count;
      }
    }
    if (last) {
      s.time = config.horizon;
    } else {
      const double next = s.time + h;
      s.time = next > s.time ? next : std::nextafter(s.time, std::numeric_limits<double>::infinity());
    }
    if (observer != nullptr) {
      observer->on_step(s.time, h, before, cont, x, any_crossed);
    }

    const Verdict v = classify_extinction(s, out.events, thresholds, config.horizon);
    if (const auto* e = std::get_if<Extinct>(&v)) {
      out.classification = *e;
      break;
    }
    if (const auto* sv = std::get_if<Survived>(&v)) {
      out.classification = *sv;
      break;
    }
  }
  out.max_position_at_end = *std::max_element(s.positions.begin(), s.positions.end());
  return out;
}

std::optional<JumpPair> alpha_from_paths(double nu, const PathConfig& config, RandomSource& rng,
                                         double time_cap) {
  BesselDim{nu}.require_transient("alpha_from_paths");
  config.validate();
  if (!(time_cap > 0.0)) {
    return std::nullopt;
  }
  const detail::LawStepper stepper(BesselLaw{nu}, config.kappa);
  const double eps = config.eps_abs;
  double x[2] = {1.0, 1.0};
  double old[2];
  double dt[2];
  double noise[2];
  double t = 0.0;
  for (;;) {
    stepper.step_sizes(x, dt, config.dt_base);
    double h = std::min(dt[0], dt[1]);
    const double remaining = time_cap - t;
    const bool last = h >= remaining;
    if (last) {
      h = remaining;
    }
    dt[0] = dt[1] = h;
    noise[0] = rng.normal();
    noise[1] = rng.normal();
    old[0] = x[0];
    old[1] = x[1];
    stepper.step(x, noise, dt);
    const bool hit0 = x[0] <= eps;
    const bool hit1 = x[1] <= eps;
    if (hit0 || hit1) {
      const double f0 = hit0 ? detail::crossing_fraction(old[0], x[0], eps) : 2.0;
      const double f1 = hit1 ? detail::crossing_fraction(old[1], x[1], eps) : 2.0;
      const int dead = f0 <= f1 ? 0 : 1;
      const int other = 1 - dead;
      const double f = std::min(f0, f1);
      const double alpha =
          std::max(old[other] + f * (x[other] - old[other]), eps);
      return JumpPair{t + f * h, alpha};
    }
    if (last) {
      return std::nullopt;
    }
    t += h;
  }
}

std::optional<JumpPair> alpha_from_paths(double nu, const PathConfig& config, RandomSource& rng) {
  return alpha_from_paths(nu, config, rng, config.horizon);
}

ScalingRun accumulate_scaling(const PairSource& next_pair, std::size_t n_events, double horizon) {
  constexpr double kRelTol = 1e-12;
  constexpr int kRun = 20;
  ScalingRun run;
  double xi = 1.0;
  double tau = 0.0;
  int streak = 0;
  for (std::size_t j = 0; j < n_events; ++j) {
    const double xi_sq = xi * xi;
    const std::optional<JumpPair> pair = next_pair((horizon - tau) / xi_sq);
    if (!pair) {
      run.horizon_reached = true;
      break;
    }
    if (!(pair->alpha > 0.0) || !(pair->sigma > 0.0)) {
      throw DomainError("scaling construction: pairs must be positive");
    }
    const double increment = xi_sq * pair->sigma;
    if (j > 0) {
      streak = increment < kRelTol * tau ? streak + 1 : 0;
    }
    tau += increment;
    xi *= pair->alpha;
    run.alphas.push_back(pair->alpha);
    run.sigmas.push_back(pair->sigma);
    run.xis.push_back(xi);
    run.partial_sums.push_back(tau);
    if (streak >= kRun) {
      run.converged = true;
      break;
    }
    if (tau > horizon) {
      run.horizon_reached = true;
      break;
    }
  }
  return run;
}

ScalingRun fv_two_particle_scaling(double nu, std::size_t n_events, const PathConfig& config,
                                   RandomSource& rng) {
  BesselDim{nu}.require_transient("fv_two_particle_scaling");
  config.validate();
  if (n_events == 0) {
    throw DomainError("scaling construction: n_events must be positive");
  }
  const PairSource source = [&](double sigma_cap) {
    return alpha_from_paths(nu, config, rng, sigma_cap);
  };
  return accumulate_scaling(source, n_events, config.horizon);
}

namespace {

// Integrates the coupled squared Bessel process alongside the particle
// system. Y = sqrt(Z) and Yhat = sqrt(Zhat) share the driver
//   dB = dY_cont - c/(2 Y) dt,  c = N nu - 1,
// so Yhat - Y_cont moves only through the drift difference.
class CouplingObserver final : public StepObserver {
public:
  CouplingObserver(double dim, double z0, double kappa, double tol, CouplingResult& out)
      : c_(dim - 1.0), y_hat_(std::sqrt(z0)), z_prev_(z0), tol_(tol), out_(out) {
    const double half = std::abs(0.5 * c_);
    kappa_eff_ = half > 1.0 ? kappa / half : kappa;
    record(0.0, z0, z0);
  }

  double max_step() const override {
    return y_hat_ > 0.0 ? kappa_eff_ * y_hat_ * y_hat_ : std::numeric_limits<double>::infinity();
  }

  void on_step(double t_new, double dt, std::span<const double> x_before,
               std::span<const double> x_cont, std::span<const double> x_after,
               bool had_events) override {
    static_cast<void>(x_before);
    const kernels::KernelTable& k = kernels::active();
    double z_cont = 0.0;
    for (const double v : x_cont) {
      const double p = std::max(v, 0.0);
      z_cont += p * p;
    }
    const double z_after = had_events ? k.sum_squares(x_after.data(), x_after.size()) : z_cont;
    const double y_old = std::sqrt(z_prev_);
    const double y_cont = std::sqrt(z_cont);

    double gap = y_hat_ - y_old;
    if (y_hat_ > 0.0) {
      gap += 0.5 * c_ * (1.0 / y_hat_ - 1.0 / y_old) * dt;
    }
    double y_new = y_cont + gap;
    if (!(y_new > 0.0)) {
      y_new = 0.0;
      gap = -y_cont;
    }
    y_hat_ = y_new;
    // Zhat = (Y_cont + gap)^2 written so that gap == 0 gives Z_cont exactly.
    const double z_hat = z_cont + gap * (2.0 * y_cont + gap);

    const double excess = std::max(z_hat - z_cont, z_hat - z_after);
    out_.max_violation = std::max(out_.max_violation, excess);
    if (excess > tol_) {
      out_.domination_holds = false;
    }
    z_prev_ = z_after;
    record(t_new, z_after, z_hat);
  }

private:
  void record(double t, double z, double z_hat) {
    out_.fv_z.times.push_back(t);
    out_.fv_z.values.push_back(z);
    out_.coupled_z.times.push_back(t);
    out_.coupled_z.values.push_back(z_hat);
  }

  double c_;
  double y_hat_;
  double z_prev_;
  double tol_;
  double kappa_eff_ = 0.01;
  CouplingResult& out_;
};

} // namespace

CouplingResult sum_of_squares_coupling(std::span<const double> x0, double nu, double horizon,
                                       const PathConfig& config, RandomSource& rng,
                                       const ExtinctionThresholds& thresholds) {
  config.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw DomainError(fmt::format("coupling: horizon must be positive, got {}", horizon));
  }
  if (x0.size() < 2) {
    throw DomainError(fmt::format("coupling: needs N >= 2, got {}", x0.size()));
  }
  const double dim = static_cast<double>(x0.size()) * nu;
  CouplingResult out;
  out.dimension_warning = dim < 2.0;
  out.max_violation = -std::numeric_limits<double>::infinity();

  PathConfig cfg = config;
  cfg.horizon = horizon;
  double z0 = 0.0;
  for (const double v : x0) {
    z0 += v * v;
  }
  CouplingObserver observer(dim, z0, config.kappa, 10.0 * config.dt_base, out);
  RunOutcome run = fv_simulate(x0, BesselLaw{nu}, cfg, rng, thresholds, &observer);
  out.classification = run.classification;
  out.event_count = run.events.size();
  const double end = out.fv_z.times.back();
  if (run.extinct()) {
    out.fv_z.terminal = Absorbed{end};
    out.coupled_z.terminal = Absorbed{end};
  }
  if (out.fv_z.times.size() == 1) {
    out.max_violation = 0.0;
  }
  return out;
}

} // namespace fvlab

#include "fvlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "fvlab/diagnostics.hpp"
#include "fvlab/error.hpp"
#include "fvlab/fleming_viot.hpp"
#include "fvlab/kernels.hpp"
#include "fvlab/paths.hpp"
#include "fvlab/quadrature.hpp"
#include "fvlab/sampling.hpp"
#include "fvlab/specfun.hpp"

namespace fvlab {

namespace {

constexpr std::size_t kShard = 1024;

void require(bool ok, const std::string& why) {
  if (!ok) {
    throw UsageError(why);
  }
}

unsigned thread_count(const ExperimentConfig& c, std::size_t work) {
  unsigned t = c.threads != 0 ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(work, 1)));
}

// out[r] = fn(r) for r < count, spread over threads. Results do not depend
// on the thread count.
template <class R, class Fn>
std::vector<R> parallel_map(std::size_t count, unsigned threads, Fn fn) {
  std::vector<R> out(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= count) {
        return;
      }
      try {
        out[r] = fn(r);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
        next.store(count);
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) {
      t.join();
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }
  return out;
}

// Fixed-size shards merged in order, so the rounding is reproducible.
SummaryStats sharded_stats(std::span<const double> xs) {
  SummaryStats total;
  for (std::size_t lo = 0; lo < xs.size(); lo += kShard) {
    const std::size_t hi = std::min(xs.size(), lo + kShard);
    total = merge_stats(total, SummaryStats::of(xs.subspan(lo, hi - lo)));
  }
  return total;
}

PathConfig path_config(const ExperimentConfig& c) {
  PathConfig p;
  p.dt_base = c.dt_base;
  p.kappa = c.kappa;
  p.eps_abs = c.eps_abs;
  p.horizon = c.horizon;
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return p;
}

void require_bessel_only(const ExperimentConfig& c, const char* cmd) {
  require(!c.beta.has_value(), fmt::format("{}: --beta does not apply to the Bessel law", cmd));
}

double transient_nu(const ExperimentConfig& c, const char* cmd) {
  const double nu = c.nu_value();
  require(std::isfinite(nu), fmt::format("{}: nu must be finite", cmd));
  require(nu < 2.0, fmt::format("{}: needs nu < 2 (no finite hitting time), got {}", cmd, nu));
  return nu;
}

const char* format_name(Format f) { return f == Format::json ? "json" : "csv"; }

void fill_manifest(Report& r, const ExperimentConfig& c) {
  auto& m = r.manifest;
  m.emplace_back("tool", std::string("fvlab"));
  m.emplace_back("version", std::string(FVLAB_VERSION));
  m.emplace_back("experiment", c.experiment);
  m.emplace_back("isa", std::string(kernels::isa_name(kernels::active().isa)));
  m.emplace_back("nu", c.nu_value());
  m.emplace_back("beta", c.beta_value());
  m.emplace_back("n_particles", static_cast<std::int64_t>(c.n_particles));
  m.emplace_back("replicas", static_cast<std::int64_t>(c.replicas));
  m.emplace_back("horizon", c.horizon);
  m.emplace_back("dt_base", c.dt_base);
  m.emplace_back("eps_abs", c.eps_abs);
  m.emplace_back("kappa", c.kappa);
  m.emplace_back("seed", static_cast<std::int64_t>(c.seed));
  m.emplace_back("law", c.law);
  m.emplace_back("method", c.method);
  m.emplace_back("sampler", c.sampler);
  m.emplace_back("events", static_cast<std::int64_t>(c.events));
  m.emplace_back("x0", c.x0);
  m.emplace_back("a", c.a);
  m.emplace_back("gamma", c.gamma);
  m.emplace_back("delta", c.delta ? Value(*c.delta) : Value(std::string("default")));
  m.emplace_back("epsilon", c.epsilon);
  m.emplace_back("format", std::string(format_name(c.format)));
  m.emplace_back("out", c.out_path.empty() ? std::string("-") : c.out_path);
}

void note_streams(Report& r, const std::string& text) {
  r.manifest.emplace_back("streams", text);
}

std::string replica_streams(std::size_t count, std::size_t offset = 0) {
  return count == 0 ? std::string("none")
                    : fmt::format("stream_id {}..{}", offset, offset + count - 1);
}

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

// ln alpha_1^2 draws, one stream per replica. NaN marks a path pair that
// hit the time cap.
std::vector<double> log_alpha_sq_draws(const ExperimentConfig& c, double nu,
                                       std::uint64_t stream_offset) {
  const PathConfig pc = path_config(c);
  const bool paths = c.sampler == "paths";
  return parallel_map<double>(c.replicas, thread_count(c, c.replicas), [&](std::size_t r) {
    RngStream rng(c.seed, stream_offset + r);
    if (!paths) {
      return std::log(sampling::sample_alpha_sq(nu, rng));
    }
    const auto pair = alpha_from_paths(nu, pc, rng);
    return pair ? std::log(pair->alpha * pair->alpha) : std::nan("");
  });
}

std::vector<double> finite_only(const std::vector<double>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const double x : v) {
    if (std::isfinite(x)) {
      out.push_back(x);
    }
  }
  return out;
}

void require_sampler(const ExperimentConfig& c) {
  require(c.sampler == "exact" || c.sampler == "paths",
          fmt::format("--sampler must be exact or paths, got '{}'", c.sampler));
}

} // namespace

Report cmd_sign_test(const ExperimentConfig& c) {
  require_bessel_only(c, "sign-test");
  const double nu = transient_nu(c, "sign-test");
  require_sampler(c);
  require(c.replicas >= 2, "sign-test: needs at least 2 replicas");
  Report r;
  fill_manifest(r, c);
  note_streams(r, replica_streams(c.replicas));

  const std::vector<double> draws = finite_only(log_alpha_sq_draws(c, nu, 0));
  require(draws.size() >= 2, "sign-test: fewer than 2 completed draws");
  const SummaryStats s = sharded_stats(draws);
  const double i_nu = specfun::i_of_nu(nu);
  const double se = s.standard_error();
  // E ln alpha_1^2 is 2 I(nu); I(nu) itself is E ln alpha_1.
  const double expected = 2.0 * i_nu;
  const bool significant = std::abs(s.mean) > 3.0 * se;
  const bool agree = i_nu == 0.0 ? !significant : (significant && (s.mean < 0) == (i_nu < 0));

  r.add("nu", nu);
  r.add("i_of_nu", i_nu);
  r.add("expected_mean_log_alpha_sq", expected);
  r.add("mc_mean_log_alpha_sq", s.mean);
  r.add("se", se);
  r.add("z_vs_expected", se > 0.0 ? (s.mean - expected) / se : 0.0);
  r.add("samples", as_int(s.count));
  r.add("incomplete", as_int(c.replicas - draws.size()));
  r.add("agree", agree);
  r.check(agree, "sign of the Monte Carlo mean disagrees with I(nu)");
  return r;
}

Report cmd_density_check(const ExperimentConfig& c) {
  require_bessel_only(c, "density-check");
  const double nu = transient_nu(c, "density-check");
  require(c.replicas >= 1, "density-check: needs at least 1 replica");
  Report r;
  fill_manifest(r, c);
  note_streams(r, fmt::format("exact: {}; paths: {}", replica_streams(c.replicas),
                              replica_streams(c.replicas, c.replicas)));

  ExperimentConfig exact_cfg = c;
  exact_cfg.sampler = "exact";
  ExperimentConfig path_cfg = c;
  path_cfg.sampler = "paths";
  const std::vector<double> exact = log_alpha_sq_draws(exact_cfg, nu, 0);
  const std::vector<double> paths = finite_only(log_alpha_sq_draws(path_cfg, nu, c.replicas));
  require(!paths.empty(), "density-check: no path pair was absorbed before the horizon");
  const KsResult ks = ks_two_sample(exact, paths);

  const auto h = [nu](double y) { return specfun::alpha_sq_density(y, nu); };
  const double mass = quad::integrate_positive_axis(h).value;
  const double log_moment =
      quad::integrate_positive_axis([&](double y) { return h(y) * std::log(y); }).value;
  double series_gap = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double y = 10.0 * (k + 0.5) / 50.0;
    series_gap = std::max(series_gap,
                          std::abs(specfun::alpha_sq_density_series(y, nu, 400) - h(y)));
  }
  const double i_nu = specfun::i_of_nu(nu);

  r.add("nu", nu);
  r.add("samples_exact", as_int(exact.size()));
  r.add("samples_paths", as_int(paths.size()));
  r.add("ks_d", ks.d);
  r.add("ks_p", ks.p);
  r.add("integral_h", mass);
  r.add("integral_h_log_y", log_moment);
  r.add("i_of_nu", i_nu);
  r.add("series_max_gap", series_gap);
  r.check(ks.p > 0.01, fmt::format("KS p = {} <= 0.01", ks.p));
  r.check(std::abs(log_moment - i_nu) <= 1e-6, "integral of h ln y differs from I(nu)");
  r.check(series_gap <= 1e-8, "series and closed form disagree");
  return r;
}

Report cmd_hitting_law(const ExperimentConfig& c) {
  require_bessel_only(c, "hitting-law");
  const double nu = transient_nu(c, "hitting-law");
  require(c.x0 > c.eps_abs && std::isfinite(c.x0), "hitting-law: --x0 must exceed eps_abs");
  require(c.replicas >= 2, "hitting-law: needs at least 2 replicas");
  const PathConfig pc = path_config(c);
  Report r;
  fill_manifest(r, c);
  note_streams(r, fmt::format("paths: {}; exact: {}", replica_streams(c.replicas),
                              replica_streams(c.replicas, c.replicas)));

  // Lockstep SIMD batches of fixed width; batch results do not depend on
  // the thread count.
  constexpr std::size_t kBatch = 256;
  const std::size_t batches = (c.replicas + kBatch - 1) / kBatch;
  const auto per_batch = parallel_map<std::vector<double>>(
      batches, thread_count(c, batches), [&](std::size_t b) {
        const std::size_t lo = b * kBatch;
        const std::size_t n = std::min(kBatch, c.replicas - lo);
        return absorption_times(BesselLaw{nu}, c.x0, pc, c.seed, lo, n);
      });
  std::vector<double> path_times;
  path_times.reserve(c.replicas);
  for (const auto& v : per_batch) {
    path_times.insert(path_times.end(), v.begin(), v.end());
  }
  const HittingTimeLaw law = HittingTimeLaw::make(c.x0 * c.x0, nu);
  const std::vector<double> exact =
      parallel_map<double>(c.replicas, thread_count(c, c.replicas), [&](std::size_t i) {
        RngStream rng(c.seed, c.replicas + i);
        return sampling::sample_hitting_time(law, rng);
      });

  const std::vector<double> finite = finite_only(path_times);
  require(finite.size() >= 2, "hitting-law: fewer than 2 paths absorbed before the horizon");
  std::vector<double> logs(finite.size());
  std::transform(finite.begin(), finite.end(), logs.begin(), [](double t) { return std::log(t); });
  const SummaryStats st = sharded_stats(finite);
  const SummaryStats sl = sharded_stats(logs);
  const double alpha = law.alpha();
  const double exact_mean =
      alpha > 1.0 ? law.start / (2.0 * (alpha - 1.0)) : std::numeric_limits<double>::infinity();
  const double exact_log_mean = std::log(law.start / 2.0) - specfun::digamma(alpha);
  const KsResult ks = ks_two_sample(finite, exact);

  r.add("nu", nu);
  r.add("x0", c.x0);
  r.add("absorbed", as_int(finite.size()));
  r.add("reached_horizon", as_int(c.replicas - finite.size()));
  r.add("mc_mean", st.mean);
  r.add("exact_mean", exact_mean);
  r.add("relative_error", std::isfinite(exact_mean) ? st.mean / exact_mean - 1.0 : std::nan(""));
  r.add("mc_mean_log", sl.mean);
  r.add("mc_mean_log_se", sl.standard_error());
  r.add("exact_mean_log", exact_log_mean);
  r.add("ks_d", ks.d);
  r.add("ks_p", ks.p);
  if (std::isfinite(exact_mean)) {
    r.check(std::abs(st.mean / exact_mean - 1.0) <= 0.05, "mean absorption time off by > 5%");
  }
  r.check(ks.p > 0.01, fmt::format("KS p = {} <= 0.01", ks.p));
  r.check(std::abs(sl.mean - exact_log_mean) <= 3.0 * sl.standard_error(),
          "E ln T0 differs from ln(x^2/2) - psi(1 - nu/2) by more than 3 SE");
  if (c.dump_paths) {
    Table t{"absorption_times", {"replica", "path_time", "exact_time"}, {}};
    for (std::size_t i = 0; i < c.replicas; ++i) {
      t.rows.push_back({as_int(i), path_times[i], exact[i]});
    }
    r.tables.push_back(std::move(t));
  }
  return r;
}

Report cmd_perpetuity(const ExperimentConfig& c) {
  require_bessel_only(c, "perpetuity");
  const double nu = transient_nu(c, "perpetuity");
  require_sampler(c);
  require(c.replicas >= 2, "perpetuity: needs at least 2 replicas");
  const PathConfig pc = path_config(c);
  Report r;
  fill_manifest(r, c);
  note_streams(r, replica_streams(c.replicas));

  using Pair = std::pair<double, double>;
  const bool paths = c.sampler == "paths";
  const HittingTimeLaw unit = HittingTimeLaw::make(1.0, nu);
  const auto draws =
      parallel_map<std::optional<Pair>>(c.replicas, thread_count(c, c.replicas), [&](std::size_t i) {
        RngStream rng(c.seed, i);
        if (paths) {
          const auto jp = alpha_from_paths(nu, pc, rng);
          return jp ? std::optional<Pair>(Pair{jp->alpha * jp->alpha, jp->sigma}) : std::nullopt;
        }
        const double a = sampling::sample_alpha_sq(nu, rng);
        const double t1 = sampling::sample_hitting_time(unit, rng);
        const double t2 = sampling::sample_hitting_time(unit, rng);
        return std::optional<Pair>(Pair{a, std::min(t1, t2)});
      });
  std::vector<Pair> pairs;
  pairs.reserve(draws.size());
  for (const auto& d : draws) {
    if (d) {
      pairs.push_back(*d);
    }
  }
  require(!pairs.empty(), "perpetuity: no completed pairs");
  const PerpetuityResult p = perpetuity_test(pairs, c.events);
  const PerpetuityVerdict want = nu < 0.0   ? PerpetuityVerdict::converges
                                 : nu > 0.0 ? PerpetuityVerdict::diverges
                                            : PerpetuityVerdict::inconclusive;
  r.add("nu", nu);
  r.add("pairs", as_int(pairs.size()));
  r.add("elog_a", p.elog_a);
  r.add("se", p.se);
  r.add("expected_elog_a", 2.0 * specfun::i_of_nu(nu));
  r.add("verdict", std::string(verdict_name(p.verdict)));
  r.add("partial_sum", p.partial_sum);
  r.check(p.verdict == want, fmt::format("verdict {} but the sign of nu predicts {}",
                                         verdict_name(p.verdict), verdict_name(want)));
  return r;
}

Report cmd_extinct(const ExperimentConfig& c) {
  require(c.law == "bessel" || c.law == "reflected",
          fmt::format("extinct: --law must be bessel or reflected, got '{}'", c.law));
  require(c.method == "fv" || c.method == "scaling",
          fmt::format("extinct: --method must be fv or scaling, got '{}'", c.method));
  const bool bessel = c.law == "bessel";
  if (bessel) {
    require(!c.beta.has_value(), "extinct: --beta does not apply to the Bessel law");
  } else {
    require(!c.nu.has_value(), "extinct: --nu does not apply to the reflected law");
    require(c.method == "fv", "extinct: --method scaling needs the Bessel law");
  }
  require(c.n_particles >= 2, "extinct: needs at least 2 particles");
  require(c.replicas >= 1, "extinct: needs at least 1 replica");
  const PathConfig pc = path_config(c);
  Report r;
  fill_manifest(r, c);
  note_streams(r, replica_streams(c.replicas));

  if (c.method == "scaling") {
    require(c.n_particles == 2, "extinct: the scaling construction has exactly 2 particles");
    const double nu = transient_nu(c, "extinct");
    require(c.events >= 1, "extinct: --events must be positive");
    const auto runs = parallel_map<ScalingRun>(
        c.replicas, thread_count(c, c.replicas), [&](std::size_t i) {
          RngStream rng(c.seed, i);
          return fv_two_particle_scaling(nu, c.events, pc, rng);
        });
    Table t{"replicas", {"replica", "converged", "horizon_reached", "pairs", "tau_n"}, {}};
    std::size_t converged = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      converged += runs[i].converged ? 1 : 0;
      const double tau = runs[i].partial_sums.empty() ? 0.0 : runs[i].partial_sums.back();
      t.rows.push_back({as_int(i), runs[i].converged, runs[i].horizon_reached,
                        as_int(runs[i].alphas.size()), tau});
    }
    const double frac = static_cast<double>(converged) / static_cast<double>(runs.size());
    r.add("law", c.law);
    r.add("method", c.method);
    r.add("nu", nu);
    r.add("converged", as_int(converged));
    r.add("extinct_fraction", frac);
    if (nu < 0.0) {
      r.check(frac == 1.0, "nu < 0 but not every scaling run converged");
    } else {
      r.check(frac == 0.0, "nu >= 0 but some scaling run converged");
    }
    r.tables.push_back(std::move(t));
    return r;
  }

  DriftLaw law;
  double x0 = c.x0;
  if (bessel) {
    const double nu = c.nu_value();
    require(std::isfinite(nu), "extinct: nu must be finite");
    law = BesselLaw{nu};
  } else {
    const double beta = c.beta_value();
    require(beta > 2.0 && std::isfinite(beta), fmt::format("extinct: needs beta > 2, got {}", beta));
    require(x0 <= PowerDriftReflected::kBarrier, "extinct: --x0 must lie in (0, 2] for the reflected law");
    law = PowerDriftReflected{beta};
  }
  require(x0 > c.eps_abs && std::isfinite(x0), "extinct: --x0 must exceed eps_abs");
  const std::vector<double> start(static_cast<std::size_t>(c.n_particles), x0);
  const auto outcomes = parallel_map<RunOutcome>(
      c.replicas, thread_count(c, c.replicas), [&](std::size_t i) {
        RngStream rng(c.seed, i);
        RunOutcome o = fv_simulate(start, law, pc, rng);
        if (!c.dump_paths) {
          o.events.clear();
          o.events.shrink_to_fit();
        }
        return o;
      });

  Table t{"replicas", {"replica", "classification", "tau_inf", "events", "degenerate", "event_cap", "max_position"}, {}};
  std::vector<double> taus;
  std::size_t extinct = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const RunOutcome& o = outcomes[i];
    const auto& s = o.final_state;
    if (const auto* e = std::get_if<Extinct>(&o.classification)) {
      ++extinct;
      taus.push_back(e->tau_inf_estimate);
      t.rows.push_back({as_int(i), std::string("extinct"), e->tau_inf_estimate,
                        as_int(s.event_count), e->degenerate_step, false, o.max_position_at_end});
    } else {
      const auto& sv = std::get<Survived>(o.classification);
      t.rows.push_back({as_int(i), std::string("survived"), std::numeric_limits<double>::infinity(),
                        as_int(s.event_count), false, sv.event_cap, o.max_position_at_end});
    }
  }
  const double frac = static_cast<double>(extinct) / static_cast<double>(outcomes.size());
  r.add("law", c.law);
  r.add("method", c.method);
  r.add("n_particles", static_cast<std::int64_t>(c.n_particles));
  r.add("extinct", as_int(extinct));
  r.add("extinct_fraction", frac);
  if (!taus.empty()) {
    const SummaryStats st = sharded_stats(taus);
    r.add("tau_inf_mean", st.mean);
    r.add("tau_inf_max", st.max);
  }
  if (bessel) {
    const double dim = c.n_particles * c.nu_value();
    if (c.nu_value() < 0.0) {
      r.check(frac == 1.0, "nu < 0 but not every replica went extinct");
    } else if (dim >= 2.0) {
      r.check(frac == 0.0, "N nu >= 2 but some replica went extinct");
    }
  } else {
    r.check(frac == 1.0, "reflected law: not every replica went extinct before the horizon");
    if (taus.size() >= 100) {
      try {
        const TailFit fit = tail_fit(taus);
        r.add("tail_rate", fit.rate);
        r.add("tail_log_intercept", fit.log_intercept);
        r.add("tail_r_squared", fit.r_squared);
        r.add("tail_t_lo", fit.t_range.first);
        r.add("tail_t_hi", fit.t_range.second);
        r.check(fit.rate > 0.0, "tail rate is not positive");
      } catch (const DomainError& e) {
        r.add("tail_fit_error", std::string(e.what()));
        r.check(false, "tail fit failed");
      }
    }
  }
  r.tables.push_back(std::move(t));
  if (!taus.empty()) {
    Table tt{"tau_inf", {"replica", "tau_inf"}, {}};
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (const auto* e = std::get_if<Extinct>(&outcomes[i].classification)) {
        tt.rows.push_back({as_int(i), e->tau_inf_estimate});
      }
    }
    r.tables.push_back(std::move(tt));
  }
  if (c.dump_paths) {
    Table ev{"events", {"replica_id", "k", "tau_k", "dying", "target"}, {}};
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& events = outcomes[i].events;
      for (std::size_t k = 0; k < events.size(); ++k) {
        ev.rows.push_back({as_int(i), as_int(k + 1), events[k].tau,
                           static_cast<std::int64_t>(events[k].dying),
                           static_cast<std::int64_t>(events[k].target)});
      }
    }
    r.tables.push_back(std::move(ev));
  }
  return r;
}

Report cmd_coupling(const ExperimentConfig& c) {
  require_bessel_only(c, "coupling");
  const double nu = c.nu_value();
  require(std::isfinite(nu), "coupling: nu must be finite");
  require(c.n_particles >= 2, "coupling: needs at least 2 particles");
  require(c.replicas >= 1, "coupling: needs at least 1 replica");
  require(c.x0 > c.eps_abs && std::isfinite(c.x0), "coupling: --x0 must exceed eps_abs");
  PathConfig pc = path_config(c);
  Report r;
  fill_manifest(r, c);
  note_streams(r, replica_streams(c.replicas));

  const std::vector<double> start(static_cast<std::size_t>(c.n_particles), c.x0);
  const auto results = parallel_map<CouplingResult>(
      c.replicas, thread_count(c, c.replicas), [&](std::size_t i) {
        RngStream rng(c.seed, i);
        CouplingResult cr = sum_of_squares_coupling(start, nu, c.horizon, pc, rng);
        if (!c.dump_paths) {
          cr.fv_z = Path{};
          cr.coupled_z = Path{};
        }
        return cr;
      });
  Table t{"replicas", {"replica", "domination_holds", "max_violation", "events", "classification"}, {}};
  std::size_t dominated = 0;
  std::size_t extinct = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const CouplingResult& cr = results[i];
    const bool ext = std::holds_alternative<Extinct>(cr.classification);
    dominated += cr.domination_holds ? 1 : 0;
    extinct += ext ? 1 : 0;
    worst = std::max(worst, cr.max_violation);
    t.rows.push_back({as_int(i), cr.domination_holds, cr.max_violation, as_int(cr.event_count),
                      std::string(ext ? "extinct" : "survived")});
  }
  const double dim = c.n_particles * nu;
  r.add("nu", nu);
  r.add("n_particles", static_cast<std::int64_t>(c.n_particles));
  r.add("dimension", dim);
  r.add("dimension_warning", dim < 2.0);
  r.add("tolerance", 10.0 * c.dt_base);
  r.add("dominated", as_int(dominated));
  r.add("extinct", as_int(extinct));
  r.add("max_violation", worst);
  r.add("all_dominated", dominated == results.size());
  if (dim >= 2.0) {
    r.check(dominated == results.size(), "coupled process exceeded Z beyond tolerance");
    r.check(extinct == 0, "N nu >= 2 but some replica went extinct");
  }
  r.tables.push_back(std::move(t));
  if (c.dump_paths) {
    Table p{"paths", {"replica", "t", "z", "z_coupled"}, {}};
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& z = results[i].fv_z;
      const auto& zh = results[i].coupled_z;
      for (std::size_t k = 0; k < z.times.size(); ++k) {
        p.rows.push_back({as_int(i), z.times[k], z.values[k], zh.values[k]});
      }
    }
    r.tables.push_back(std::move(p));
  }
  return r;
}

Report cmd_fw_check(const ExperimentConfig& c) {
  require(!c.nu.has_value(), "fw-check: --nu does not apply to the power-drift law");
  const double beta = c.beta_value();
  require(beta > 2.0 && std::isfinite(beta), fmt::format("fw-check: needs beta > 2, got {}", beta));
  require(c.a > 0.0 && std::isfinite(c.a), "fw-check: --a must be positive");
  require(c.gamma > 0.0 && c.gamma < 1.0, "fw-check: --gamma must lie in (0, 1)");
  require(c.replicas >= 1, "fw-check: needs at least 1 replica");
  const PathConfig pc = path_config(c);
  const double delta_max = c.a * std::pow(c.gamma / 2.0, 1.0 / beta) / 2.0;
  const double delta = c.delta.value_or(0.5 * delta_max);
  if (const std::string why = specfun::fw_window_violation(c.a, beta, c.gamma, delta);
      !why.empty()) {
    throw UsageError("fw-check: delta too large: " + why);
  }
  Report r;
  fill_manifest(r, c);
  note_streams(r, "stream_id 0, replicas drawn in order");
  RngStream rng(c.seed, 0);
  const FwCheckResult f = fw_deviation_check(c.a, beta, c.gamma, delta, c.replicas, pc, rng);
  r.add("a", f.a);
  r.add("beta", f.beta);
  r.add("gamma", f.gamma);
  r.add("delta", f.delta);
  r.add("lipschitz_L", f.lipschitz_L);
  r.add("horizon", f.horizon);
  r.add("replicas", as_int(f.n_reps));
  r.add("exceedances", as_int(f.exceedances));
  r.add("empirical_prob", f.empirical_prob);
  r.add("standard_error", f.standard_error);
  r.add("bound", f.bound);
  r.check(f.empirical_prob <= f.bound + 3.0 * f.standard_error,
          "empirical deviation probability exceeds the bound by more than 3 SE");
  return r;
}

Report cmd_constants(const ExperimentConfig& c) {
  require(!c.nu.has_value(), "constants: --nu does not apply");
  const double beta = c.beta_value();
  specfun::ProofConstants k;
  try {
    k = specfun::proof_constants(c.a, beta, c.gamma, c.epsilon, c.n_particles);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  Report r;
  fill_manifest(r, c);
  note_streams(r, "none");
  r.add("a", k.a);
  r.add("beta", k.beta);
  r.add("gamma", k.gamma);
  r.add("epsilon", k.epsilon);
  r.add("n_particles", static_cast<std::int64_t>(k.n_particles));
  r.add("u", k.u);
  r.add("delta_bar", k.delta_bar);
  r.add("M", k.M);
  r.add("c4", k.c4);
  r.add("time_margin_holds", k.time_margin_holds);
  r.add("contraction_holds", k.contraction_holds);
  r.add("deviation_window_holds", k.deviation_window_holds);
  r.check(k.time_margin_holds, "(1-gamma/2)(a-delta_bar)^beta > (1-gamma) a^beta fails");
  r.check(k.contraction_holds, "c4 < 1 fails");
  Table t{"delta_hat", {"n", "delta_hat"}, {}};
  for (std::size_t n = 0; n < k.delta_hat.size(); ++n) {
    t.rows.push_back({as_int(n + 1), k.delta_hat[n]});
  }
  r.tables.push_back(std::move(t));
  return r;
}

const char* const* experiment_names() {
  static const char* const names[] = {"sign-test",     "extinct",   "coupling",
                                      "fw-check",      "density-check", "constants",
                                      "hitting-law",   "perpetuity", nullptr};
  return names;
}

Report run_experiment(const ExperimentConfig& c) {
  using Cmd = Report (*)(const ExperimentConfig&);
  static const std::pair<const char*, Cmd> table[] = {
      {"sign-test", cmd_sign_test},     {"extinct", cmd_extinct},
      {"coupling", cmd_coupling},       {"fw-check", cmd_fw_check},
      {"density-check", cmd_density_check}, {"constants", cmd_constants},
      {"hitting-law", cmd_hitting_law}, {"perpetuity", cmd_perpetuity},
  };
  for (const auto& [name, fn] : table) {
    if (c.experiment == name) {
      const auto start = std::chrono::steady_clock::now();
      Report r;
      try {
        r = fn(c);
      } catch (const DomainError& e) {
        throw UsageError(e.what());
      }
      if (c.timing) {
        const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
        r.manifest.emplace_back("wall_time_s", wall.count());
      }
      return r;
    }
  }
  throw UsageError(fmt::format("unknown experiment '{}'", c.experiment));
}

} // namespace fvlab

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "fvlab/diagnostics.hpp"
#include "fvlab/error.hpp"
#include "fvlab/fleming_viot.hpp"
#include "fvlab/sampling.hpp"
#include "fvlab/specfun.hpp"
#include "support.hpp"

using namespace fvlab;

namespace {

std::vector<EventRecord> events_at(std::size_t count, double start, double spacing) {
  std::vector<EventRecord> ev(count);
  for (std::size_t k = 0; k < count; ++k) {
    ev[k] = EventRecord{start + spacing * static_cast<double>(k), 1, 2};
  }
  return ev;
}

PairSource constant_pairs(double alpha, double sigma) {
  return [=](double) { return std::optional<JumpPair>(JumpPair{sigma, alpha}); };
}

} // namespace

TEST_CASE("scripted crossing relocates onto the chosen survivor") {
  PathConfig cfg;
  cfg.horizon = 1.0;
  testing::ScriptedSource src;
  // Step 1: particle 2 is pushed far below zero, the others stand still.
  src.normals = {0.0, -1e3, 0.0};
  src.indices = {1};
  ExtinctionThresholds th;
  th.max_events = 1;
  const std::vector<double> x0 = {1.0, 0.5, 1.5};
  const RunOutcome out = fv_simulate(x0, BesselLaw{1.0}, cfg, src, th);

  REQUIRE(out.events.size() == 1);
  CHECK(out.events[0].dying == 2);
  CHECK(out.events[0].target == 3);
  CHECK(src.last_index_range == 2);
  CHECK(out.final_state.positions[1] == out.final_state.positions[2]);
  CHECK(out.final_state.event_count == 1);
  const auto* s = std::get_if<Survived>(&out.classification);
  REQUIRE(s != nullptr);
  CHECK(s->event_cap);

  testing::ScriptedSource other;
  other.normals = {0.0, -1e3, 0.0};
  other.indices = {0};
  const RunOutcome first = fv_simulate(x0, BesselLaw{1.0}, cfg, other, th);
  REQUIRE(first.events.size() == 1);
  CHECK(first.events[0].target == 1);
  CHECK(first.final_state.positions[1] == 1.0);
}

TEST_CASE("several crossings in one step are handled in label order") {
  PathConfig cfg;
  cfg.horizon = 1.0;
  testing::ScriptedSource src;
  src.normals = {-1e3, 0.0, -1e3};
  ExtinctionThresholds th;
  th.max_events = 2;
  const std::vector<double> x0 = {1.0, 0.7, 1.0};
  const RunOutcome out = fv_simulate(x0, BesselLaw{1.0}, cfg, src, th);
  REQUIRE(out.events.size() == 2);
  CHECK(out.events[0].dying == 1);
  CHECK(out.events[0].target == 2);
  CHECK(out.events[1].dying == 3);
  CHECK(out.events[1].tau > out.events[0].tau);
  // Particle 1 already sits on particle 2, so particle 3 has two choices.
  CHECK(src.last_index_range == 2);
  CHECK(src.index_calls == 2);
  for (const double v : out.final_state.positions) {
    CHECK(v == out.final_state.positions[1]);
  }
}

TEST_CASE("all particles crossing in one step is a degenerate extinction") {
  PathConfig cfg;
  testing::ScriptedSource src;
  src.normals = {-1e3, -1e3};
  const std::vector<double> x0 = {1.0, 1.0};
  const RunOutcome out = fv_simulate(x0, BesselLaw{1.0}, cfg, src);
  REQUIRE(out.extinct());
  const auto& e = std::get<Extinct>(out.classification);
  CHECK(e.degenerate_step);
  CHECK(e.tau_inf_estimate > 0.0);
  CHECK(e.tau_inf_estimate <= cfg.dt_base);
  CHECK(out.events.empty());
  CHECK(src.index_calls == 0);
}

TEST_CASE("fv_simulate rejects invalid input") {
  PathConfig cfg;
  RngStream rng(1, 0);
  const std::vector<double> one = {1.0};
  const std::vector<double> two = {1.0, 1.0};
  const std::vector<double> low = {1.0, 1e-9};
  const std::vector<double> high = {1.0, 2.5};
  CHECK_THROWS_AS(fv_simulate(one, BesselLaw{-1.0}, cfg, rng), DomainError);
  CHECK_THROWS_AS(fv_simulate(two, SquaredBesselLaw{1.0}, cfg, rng), DomainError);
  CHECK_THROWS_AS(fv_simulate(low, BesselLaw{-1.0}, cfg, rng), DomainError);
  CHECK_THROWS_AS(fv_simulate(high, PowerDriftReflected{3.0}, cfg, rng), DomainError);
  ExtinctionThresholds bad;
  bad.window_events = 0;
  CHECK_THROWS_AS(fv_simulate(two, BesselLaw{-1.0}, cfg, rng, bad), DomainError);
  PathConfig neg = cfg;
  neg.dt_base = -1.0;
  CHECK_THROWS_AS(fv_simulate(two, BesselLaw{-1.0}, neg, rng), DomainError);
}

TEST_CASE("classify_extinction") {
  const ExtinctionThresholds th;
  SystemState s;
  s.positions = {1e-8, 2e-8, 5e-9};
  s.time = 3.0;
  s.event_count = 100;

  SUBCASE("dense events near zero") {
    const auto ev = events_at(100, 2.0, 1e-12);
    const Verdict v = classify_extinction(s, ev, th, 10.0);
    REQUIRE(std::holds_alternative<Extinct>(v));
    CHECK(std::get<Extinct>(v).tau_inf_estimate == ev.back().tau);
    CHECK_FALSE(std::get<Extinct>(v).degenerate_step);
  }
  SUBCASE("dense events but a particle far away") {
    s.positions[1] = 0.5;
    const auto ev = events_at(100, 2.0, 1e-12);
    CHECK(std::holds_alternative<Continue>(classify_extinction(s, ev, th, 10.0)));
  }
  SUBCASE("sparse events near zero") {
    const auto ev = events_at(100, 2.0, 1e-3);
    CHECK(std::holds_alternative<Continue>(classify_extinction(s, ev, th, 10.0)));
  }
  SUBCASE("fewer than m events") {
    const auto ev = events_at(99, 2.0, 1e-15);
    CHECK(std::holds_alternative<Continue>(classify_extinction(s, ev, th, 10.0)));
  }
  SUBCASE("no events by the horizon") {
    s.positions = {1.0, 1.0};
    s.time = 10.0;
    s.event_count = 0;
    const Verdict v = classify_extinction(s, {}, th, 10.0);
    REQUIRE(std::holds_alternative<Survived>(v));
    CHECK(std::get<Survived>(v).horizon == 10.0);
    CHECK_FALSE(std::get<Survived>(v).event_cap);
  }
  SUBCASE("event cap") {
    s.positions = {0.3, 0.2};
    s.event_count = th.max_events;
    const auto ev = events_at(100, 2.0, 1e-3);
    const Verdict v = classify_extinction(s, ev, th, 10.0);
    REQUIRE(std::holds_alternative<Survived>(v));
    CHECK(std::get<Survived>(v).event_cap);
  }
}

TEST_CASE("scaling construction on constant pairs") {
  SUBCASE("alpha = 1/2 sums to 4/3") {
    const ScalingRun run = accumulate_scaling(constant_pairs(0.5, 1.0), 200, 1e3);
    CHECK(run.converged);
    CHECK_FALSE(run.horizon_reached);
    CHECK(run.partial_sums.back() == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(run.alphas.size() < 200);
  }
  SUBCASE("alpha = 1 gives partial sums n") {
    const ScalingRun run = accumulate_scaling(constant_pairs(1.0, 1.0), 50, 1e3);
    CHECK_FALSE(run.converged);
    REQUIRE(run.partial_sums.size() == 50);
    for (std::size_t j = 0; j < 50; ++j) {
      CHECK(run.partial_sums[j] == static_cast<double>(j + 1));
    }
  }
  SUBCASE("alpha = 2 gives (4^n - 1) / 3 and diverges") {
    const ScalingRun run = accumulate_scaling(constant_pairs(2.0, 1.0), 10, 1e9);
    CHECK_FALSE(run.converged);
    REQUIRE(run.partial_sums.size() == 10);
    for (std::size_t j = 0; j < 10; ++j) {
      CHECK(run.partial_sums[j] == (std::pow(4.0, static_cast<double>(j + 1)) - 1.0) / 3.0);
    }
  }
  SUBCASE("horizon stops a divergent run") {
    const ScalingRun run = accumulate_scaling(constant_pairs(2.0, 1.0), 1000, 1e3);
    CHECK_FALSE(run.converged);
    CHECK(run.horizon_reached);
    CHECK(run.partial_sums.back() > 1e3);
    CHECK(run.partial_sums.size() == 6);
  }
  SUBCASE("the source sees the remaining budget in unscaled time") {
    std::vector<double> caps;
    const PairSource src = [&](double cap) {
      caps.push_back(cap);
      return std::optional<JumpPair>(JumpPair{1.0, 2.0});
    };
    accumulate_scaling(src, 3, 100.0);
    REQUIRE(caps.size() == 3);
    CHECK(caps[0] == 100.0);
    CHECK(caps[1] == 99.0 / 4.0);
    CHECK(caps[2] == 95.0 / 16.0);
  }
  SUBCASE("non-positive pairs are refused") {
    CHECK_THROWS_AS(accumulate_scaling(constant_pairs(0.0, 1.0), 5, 10.0), DomainError);
  }
}

TEST_CASE("scaling run algebra holds bit for bit") {
  RngStream rng(5, 0);
  PathConfig cfg;
  for (int r = 0; r < 20; ++r) {
    const ScalingRun run = fv_two_particle_scaling(-1.0, 300, cfg, rng);
    REQUIRE(!run.alphas.empty());
    CHECK(run.xis[0] == run.alphas[0]);
    CHECK(run.partial_sums[0] == run.sigmas[0]);
    for (std::size_t j = 1; j < run.alphas.size(); ++j) {
      CHECK(run.xis[j] == run.xis[j - 1] * run.alphas[j]);
      CHECK(run.partial_sums[j] ==
            run.partial_sums[j - 1] + run.xis[j - 1] * run.xis[j - 1] * run.sigmas[j]);
      CHECK(run.partial_sums[j] >= run.partial_sums[j - 1]);
    }
    for (const double a : run.alphas) {
      CHECK(a > 0.0);
    }
  }
  CHECK_THROWS_AS(fv_two_particle_scaling(2.0, 10, cfg, rng), NoFiniteHittingTime);
  CHECK_THROWS_AS(fv_two_particle_scaling(-1.0, 0, cfg, rng), DomainError);
}

TEST_CASE("sign of E ln alpha^2 predicts convergence of the scaling series") {
  // The limit has a heavy tail (about 3% of nu = -1 limits exceed 1e3), so
  // the horizon sits well above it.
  PathConfig cfg;
  cfg.horizon = 1e5;
  for (const double nu : {-4.0, -1.0, 1.0}) {
    CAPTURE(nu);
    double sum_log = 0.0;
    std::size_t n_alpha = 0;
    std::vector<bool> converged;
    for (std::uint64_t r = 0; r < 1000; ++r) {
      RngStream rng(17, r);
      const ScalingRun run = fv_two_particle_scaling(nu, 2000, cfg, rng);
      for (const double a : run.alphas) {
        sum_log += 2.0 * std::log(a);
      }
      n_alpha += run.alphas.size();
      converged.push_back(run.converged);
    }
    const bool predicted = sum_log / static_cast<double>(n_alpha) < 0.0;
    const auto agree = static_cast<double>(std::count(converged.begin(), converged.end(), predicted));
    CHECK(agree / 1000.0 >= 0.99);
    CHECK(predicted == (nu < 0.0));
  }
}

TEST_CASE("alpha_from_paths") {
  PathConfig cfg;
  CHECK_THROWS_AS(alpha_from_paths(2.5, cfg, *std::make_unique<RngStream>(1, 0)),
                  NoFiniteHittingTime);

  SUBCASE("time cap") {
    RngStream rng(2, 0);
    CHECK_FALSE(alpha_from_paths(-1.0, cfg, rng, 1e-9).has_value());
    CHECK_FALSE(alpha_from_paths(-1.0, cfg, rng, 0.0).has_value());
  }
  SUBCASE("alpha^2 follows the exact law at nu = -1") {
    RngStream paths(3, 0);
    RngStream exact(3, 1);
    std::vector<double> a, b;
    for (int i = 0; i < 10000; ++i) {
      const auto p = alpha_from_paths(-1.0, cfg, paths);
      REQUIRE(p.has_value());
      CHECK(p->alpha > 0.0);
      CHECK(p->sigma > 0.0);
      a.push_back(p->alpha * p->alpha);
      b.push_back(sampling::sample_alpha_sq(-1.0, exact));
    }
    CHECK(ks_two_sample(a, b).p > 0.01);
  }
  SUBCASE("sigma is dominated by a single hitting time at nu = -4") {
    RngStream paths(4, 0);
    RngStream exact(4, 1);
    SummaryStats sig, hit;
    const HittingTimeLaw law = HittingTimeLaw::make(1.0, -4.0);
    for (int i = 0; i < 10000; ++i) {
      sig.add(alpha_from_paths(-4.0, cfg, paths)->sigma);
      hit.add(sampling::sample_hitting_time(law, exact));
    }
    CHECK(sig.mean <= hit.mean + 3.0 * std::hypot(sig.standard_error(), hit.standard_error()));
    CHECK(hit.mean == doctest::Approx(0.25).epsilon(0.05));
  }
}

TEST_CASE("particle system extinction dichotomy") {
  PathConfig cfg;
  SUBCASE("N = 2, nu = -4 always dies out") {
    const std::vector<double> x0 = {1.0, 1.0};
    int extinct = 0;
    for (std::uint64_t r = 0; r < 1000; ++r) {
      RngStream rng(23, r);
      extinct += fv_simulate(x0, BesselLaw{-4.0}, cfg, rng).extinct() ? 1 : 0;
    }
    CHECK(extinct == 1000);
  }
  SUBCASE("N = 4, nu = 0.5 survives to the horizon") {
    cfg.horizon = 5.0;
    const std::vector<double> x0 = {1.0, 1.0, 1.0, 1.0};
    int extinct = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
      RngStream rng(29, r);
      const RunOutcome out = fv_simulate(x0, BesselLaw{0.5}, cfg, rng);
      extinct += out.extinct() ? 1 : 0;
      CHECK(out.final_state.time == 5.0);
    }
    CHECK(extinct == 0);
  }
}

TEST_CASE("event log invariants") {
  PathConfig cfg;
  cfg.horizon = 20.0;
  const std::vector<double> x0 = {1.0, 0.5, 1.5};
  for (std::uint64_t r = 0; r < 20; ++r) {
    for (const DriftLaw& law : {DriftLaw{BesselLaw{-1.0}}, DriftLaw{PowerDriftReflected{3.0}}}) {
      RngStream rng(41, r);
      const RunOutcome out = fv_simulate(x0, law, cfg, rng);
      CHECK(out.final_state.positions.size() == 3);
      CHECK(out.final_state.event_count == out.events.size());
      for (std::size_t k = 0; k < out.events.size(); ++k) {
        const EventRecord& e = out.events[k];
        CHECK(e.tau > 0.0);
        CHECK(e.dying >= 1);
        CHECK(e.dying <= 3);
        CHECK(e.target >= 1);
        CHECK(e.target <= 3);
        CHECK(e.dying != e.target);
        if (k > 0) {
          CHECK(e.tau > out.events[k - 1].tau);
        }
      }
      if (!out.extinct()) {
        for (const double v : out.final_state.positions) {
          CHECK(v > cfg.eps_abs);
        }
      }
      if (std::holds_alternative<PowerDriftReflected>(law)) {
        for (const double v : out.final_state.positions) {
          CHECK(v <= 2.0);
        }
      }
      const double top = *std::max_element(out.final_state.positions.begin(),
                                           out.final_state.positions.end());
      CHECK(out.max_position_at_end == top);
    }
  }
}

namespace {

class MaxTracker final : public StepObserver {
public:
  double highest = 0.0;
  std::size_t steps = 0;
  void on_step(double, double, std::span<const double>, std::span<const double>,
               std::span<const double> x_after, bool) override {
    ++steps;
    for (const double v : x_after) {
      highest = std::max(highest, v);
    }
  }
};

} // namespace

TEST_CASE("reflected particles never leave (0, 2]") {
  PathConfig cfg;
  cfg.horizon = 50.0;
  const std::vector<double> x0 = {1.9, 1.99};
  for (std::uint64_t r = 0; r < 10; ++r) {
    RngStream rng(43, r);
    MaxTracker tracker;
    fv_simulate(x0, PowerDriftReflected{3.0}, cfg, rng, {}, &tracker);
    CHECK(tracker.steps > 0);
    CHECK(tracker.highest <= 2.0);
  }
}

TEST_CASE("fv_simulate is deterministic per stream") {
  PathConfig cfg;
  cfg.horizon = 10.0;
  const std::vector<double> x0 = {1.0, 1.0, 1.0};
  RngStream a(7, 3), b(7, 3);
  const RunOutcome ra = fv_simulate(x0, BesselLaw{-0.5}, cfg, a);
  const RunOutcome rb = fv_simulate(x0, BesselLaw{-0.5}, cfg, b);
  REQUIRE(ra.events.size() == rb.events.size());
  for (std::size_t k = 0; k < ra.events.size(); ++k) {
    CHECK(ra.events[k].tau == rb.events[k].tau);
    CHECK(ra.events[k].target == rb.events[k].target);
  }
  CHECK(ra.final_state.positions == rb.final_state.positions);
}

TEST_CASE("sum-of-squares coupling") {
  PathConfig cfg;
  SUBCASE("starts from the sum of squares") {
    RngStream rng(1, 0);
    const std::vector<double> x0 = {3.0, 4.0};
    const CouplingResult res = sum_of_squares_coupling(x0, -1.0, 0.1, cfg, rng);
    CHECK(res.fv_z.values.front() == 25.0);
    CHECK(res.coupled_z.values.front() == 25.0);
    CHECK(res.dimension_warning);
  }
  SUBCASE("without jumps the coupled process equals Z") {
    testing::ZeroNoise zero;
    const std::vector<double> x0 = {0.5, 1.0, 2.0};
    const CouplingResult res = sum_of_squares_coupling(x0, 1.5, 2.0, cfg, zero);
    CHECK(res.event_count == 0);
    CHECK_FALSE(res.dimension_warning);
    REQUIRE(res.fv_z.values.size() > 10);
    CHECK(res.coupled_z.values == res.fv_z.values);
    CHECK(res.coupled_z.times == res.fv_z.times);
    CHECK(res.max_violation == 0.0);
  }
  SUBCASE("N = 4, nu = 0.5 is dominated in every replica") {
    const std::vector<double> x0 = {1.0, 1.0, 1.0, 1.0};
    std::size_t events = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
      RngStream rng(11, r);
      const CouplingResult res = sum_of_squares_coupling(x0, 0.5, 5.0, cfg, rng);
      CHECK(res.domination_holds);
      CHECK(res.max_violation <= 10.0 * cfg.dt_base);
      CHECK_FALSE(std::holds_alternative<Extinct>(res.classification));
      CHECK(res.fv_z.times.back() == 5.0);
      events += res.event_count;
    }
    CHECK(events > 0);
  }
}

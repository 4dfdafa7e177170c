// fvlab: batch runner for the Fleming-Viot experiments.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fvlab/experiments.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kAssertFailure = 3;

int fail(const std::string& why) {
  std::cerr << "fvlab: error: " << why << '\n';
  return kUsageError;
}

} // namespace

int main(int argc, char** argv) {
  using fvlab::ExperimentConfig;
  ExperimentConfig cfg;
  bool check = false;
  std::string format = "csv";

  CLI::App app{"Monte Carlo experiments for Fleming-Viot particle systems"};
  app.set_version_flag("--version", std::string(FVLAB_VERSION));
  app.set_config("--config", "", "flat key = value file (# comments); flags override it");
  app.require_subcommand(1);

  app.add_option("--nu", cfg.nu, "Bessel dimension (default -1)");
  app.add_option("--beta", cfg.beta, "power-drift exponent, > 2 (default 3)");
  app.add_option("--n-particles,--n_particles", cfg.n_particles, "number of particles")
      ->capture_default_str();
  app.add_option("--replicas", cfg.replicas, "replicas or samples")->capture_default_str();
  app.add_option("--horizon", cfg.horizon, "time horizon")->capture_default_str();
  app.add_option("--dt,--dt-base,--dt_base", cfg.dt_base, "largest time step")
      ->capture_default_str();
  app.add_option("--eps-abs,--eps_abs", cfg.eps_abs, "absorption threshold")
      ->capture_default_str();
  app.add_option("--kappa", cfg.kappa, "adaptive step coefficient")->capture_default_str();
  app.add_option("--seed", cfg.seed, "master seed")->capture_default_str();
  app.add_option("--out", cfg.out_path, "output file (default: stdout)");
  app.add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_flag("--assert", check, "exit with code 3 if an acceptance check fails");
  app.add_flag("--dump-paths,--dump_paths", cfg.dump_paths, "include per-replica paths/events");
  app.add_flag("--timing", cfg.timing, "record wall time in the manifest");
  app.add_option("--threads", cfg.threads, "worker threads (0: all cores)")->capture_default_str();
  app.add_option("--law", cfg.law, "bessel or reflected")->capture_default_str();
  app.add_option("--method", cfg.method, "fv or scaling")->capture_default_str();
  app.add_option("--sampler", cfg.sampler, "exact or paths")->capture_default_str();
  app.add_option("--events", cfg.events, "pairs per scaling run / perpetuity terms")
      ->capture_default_str();
  app.add_option("--x0", cfg.x0, "start value of each particle")->capture_default_str();
  app.add_option("--a", cfg.a, "initial height a")->capture_default_str();
  app.add_option("--gamma", cfg.gamma, "gamma in (0,1)")->capture_default_str();
  app.add_option("--delta", cfg.delta, "deviation delta (fw-check)");
  app.add_option("--epsilon", cfg.epsilon, "epsilon in (0,1) (constants)")->capture_default_str();

  const char* const* names = fvlab::experiment_names();
  const std::pair<const char*, const char*> help[] = {
      {"sign-test", "sign of E ln alpha_1^2 against I(nu)"},
      {"extinct", "extinction of the particle system"},
      {"coupling", "sum-of-squares coupling with a squared Bessel process"},
      {"fw-check", "deviation probability against the Gaussian-tail bound"},
      {"density-check", "jump-location law: samplers, density, series"},
      {"constants", "proof constants for (a, beta, gamma, epsilon, N)"},
      {"hitting-law", "path absorption times against x^2/(2G)"},
      {"perpetuity", "perpetuity sign test on (alpha^2, sigma) pairs"},
  };
  for (std::size_t i = 0; names[i] != nullptr; ++i) {
    app.add_subcommand(names[i], help[i].second)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(e.what());
  }

  cfg.experiment = app.get_subcommands().front()->get_name();
  cfg.format = format == "json" ? fvlab::Format::json : fvlab::Format::csv;

  fvlab::Report report;
  try {
    report = fvlab::run_experiment(cfg);
  } catch (const fvlab::UsageError& e) {
    return fail(e.what());
  }

  if (cfg.out_path.empty()) {
    fvlab::write_report(report, cfg.format, std::cout);
  } else {
    std::ofstream out(cfg.out_path, std::ios::binary);
    if (!out) {
      return fail(fmt::format("cannot open '{}' for writing", cfg.out_path));
    }
    fvlab::write_report(report, cfg.format, out);
    if (!out) {
      return fail(fmt::format("write to '{}' failed", cfg.out_path));
    }
  }

  if (check && !report.assert_failures.empty()) {
    for (const std::string& f : report.assert_failures) {
      std::cerr << "fvlab: check failed: " << f << '\n';
    }
    return kAssertFailure;
  }
  return 0;
}

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "fvlab/report.hpp"

namespace fvlab {

/// Invalid or inconsistent experiment settings; the CLI exits with code 2.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string experiment;
  std::optional<double> nu;    // Bessel dimension, default -1
  std::optional<double> beta;  // power-drift exponent, default 3
  int n_particles = 2;
  std::size_t replicas = 1000;
  double horizon = 1e3;
  double dt_base = 1e-3;
  double eps_abs = 1e-6;
  double kappa = 0.01;
  std::uint64_t seed = 1;
  std::string out_path;  // empty: standard output
  Format format = Format::csv;

  std::string law = "bessel";      // bessel | reflected
  std::string method = "fv";       // fv | scaling
  std::string sampler = "exact";   // exact | paths
  std::size_t events = 200;        // pairs per scaling run
  double x0 = 1.0;                 // start value of every particle / path
  double a = 1.0;
  double gamma = 0.5;
  std::optional<double> delta;     // fw-check deviation, default half the largest valid
  double epsilon = 0.5;
  bool dump_paths = false;
  bool timing = false;
  unsigned threads = 0;            // 0: hardware concurrency

  double nu_value() const { return nu.value_or(-1.0); }
  double beta_value() const { return beta.value_or(3.0); }
};

/// Names of the available experiments.
const char* const* experiment_names();

/// Runs config.experiment. Throws UsageError for unknown experiments and
/// out-of-range or inconsistent settings. Acceptance checks that fail are
/// listed in Report::assert_failures.
Report run_experiment(const ExperimentConfig& config);

Report cmd_sign_test(const ExperimentConfig& config);
Report cmd_extinct(const ExperimentConfig& config);
Report cmd_coupling(const ExperimentConfig& config);
Report cmd_fw_check(const ExperimentConfig& config);
Report cmd_density_check(const ExperimentConfig& config);
Report cmd_constants(const ExperimentConfig& config);
Report cmd_hitting_law(const ExperimentConfig& config);
Report cmd_perpetuity(const ExperimentConfig& config);

} // namespace fvlab

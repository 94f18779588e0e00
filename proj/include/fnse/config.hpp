#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "fnse/solver.hpp"

namespace fnse {

enum class Command {
  verify_levy,
  verify_fields,
  verify_feynman_kac,
  verify_estimates,
  solve,
  continue_run,
  compare,
};

/// Terminal-data preset named in the config's `u0` key.
struct U0Spec {
  enum class Kind { taylor_green, single_mode, zero, file } kind = Kind::taylor_green;
  double amplitude = 1.0;
  Eigen::VectorXd mode_k;
  Eigen::VectorXd mode_e;
  std::string path;
};

/// Parse error carrying the offending line.
struct ConfigError : std::runtime_error {
  ConfigError(int line_number, const std::string& message)
      : std::runtime_error("config line " + std::to_string(line_number) + ": " + message),
        line(line_number) {}
  int line;
};

struct RunConfig {
  Command command = Command::verify_fields;
  std::uint64_t master_seed = 1;
  std::string output_dir;
  int workers = 0;

  SolveConfig solve;          // grid, symbol, viscosity, M, dt, slices, tolerances
  double samples_scale = 1.0; // multiplies the default sample counts of verify suites
  U0Spec u0;
  double horizon = -0.5;      // continue: total horizon
  double q = 2.0;             // Krylov time exponent
  std::string compare_a, compare_b;
  double compare_budget = 0.05;

  /// true for solve/continue/compare, where the solver ranges apply
  bool solver_command() const {
    return command == Command::solve || command == Command::continue_run ||
           command == Command::compare;
  }
};

/// Parses a `key = value` document (one pair per line, # comments). Unknown
/// keys and out-of-range values are rejected with their line number.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::filesystem::path& path);

/// Materializes the configured terminal data on the solve grid.
PeriodicField build_u0(const RunConfig& cfg);

const char* command_name(Command c);

/// Documented keys and defaults for --help.
std::string config_reference();

}  // namespace fnse

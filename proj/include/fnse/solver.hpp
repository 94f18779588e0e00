#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "fnse/field.hpp"
#include "fnse/flow.hpp"
#include "fnse/levy.hpp"

namespace fnse {

/// Configuration of the stochastic fixed-point solver.
struct SolveConfig {
  PeriodicGrid grid{2, 32};
  LevySymbol symbol = LevySymbol::isotropic(1.5, 1.0);
  double viscosity = 1.0;
  int samples_per_node = 2000;  // M
  double dt = 1e-3;             // SDE step cap; snapped so slices sit on the ladder
  int time_slices = 4;          // K
  double c0 = 1.0;              // horizon constant, calibratable
  double picard_tol = 1e-3;
  int picard_max = 12;
  double p = 4.0;               // norm exponent, > 2d/alpha
  InterpMode interpolation = InterpMode::linear;
  std::uint64_t seed = 0;
  int max_halvings = 6;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double max_slice_diff = 0.0;          // sup over slices of ||u^{n+1}_t - u^n_t||_p
  double noise_floor = 0.0;             // 3 x worst per-slice aggregate stderr
  double exp_moment_max = 0.0;          // worst node mean of exp(4 int |grad u|)
  std::vector<double> slice_diffs;
};

struct SolutionHistory {
  VelocityHistory u;
  std::vector<double> se_aggregate;     // per slice, L^p norm of the stderr field
  std::vector<double> norm_track;       // ||u_t||_p per slice
  std::vector<double> grad_norm_track;  // ||grad u_t||_p per slice
  std::vector<IterationRecord> iterations;
  double horizon = 0.0;
  int halvings = 0;
  bool converged = false;
};

/// Raised when the Picard map fails to contract at this resolution even
/// after exhausting the horizon halvings.
struct NoLocalSolutionError : std::runtime_error {
  NoLocalSolutionError(std::string what, std::vector<IterationRecord> record)
      : std::runtime_error(std::move(what)), iterations(std::move(record)) {}
  std::vector<IterationRecord> iterations;
};

/// Horizon formula T = max(-1, -1/(C0 ||grad u0||_p)); the zero field gets
/// the full unit horizon. solve_local additionally halves this whenever the
/// gamma = 4 exponential-moment diagnostic exceeds 2.
double local_horizon(const PeriodicField& u0, const SolveConfig& cfg);

struct PicardStepResult {
  std::vector<double> times;
  std::vector<PeriodicField> slices;     // projected, mean-zero
  std::vector<double> se_aggregate;
  double exp_moment_max = 0.0;
  /// The exponential-moment diagnostic exceeded 2 at the deepest slice, so
  /// the remaining slices were not computed; the caller should halve |T|.
  bool aborted_exp_moment = false;
};

/// One fixed-point update: per slice time and node, average the transported
/// terminal data over M flows driven by u_n, Leray-project, subtract the
/// mean. RNG streams are keyed (slice, node, sample) and do not depend on
/// the iteration index, so successive iterates differ only through the drift.
PicardStepResult picard_step(const VelocityHistory& u_n, const PeriodicField& u0,
                             const SolveConfig& cfg);

/// Local solve: iterate picard_step from the frozen initial history until
/// the sup-slice difference drops below picard_tol + 3 x aggregate stderr.
SolutionHistory solve_local(const PeriodicField& u0, const SolveConfig& cfg);

struct WeakFormReport {
  double residual = 0.0;
  double stderr_budget = 0.0;      // propagated Monte Carlo error
  double quadrature_budget = 0.0;  // trapezoid-in-time estimate
};

/// Weak-form residual <u_T,phi> - <u_0,phi> - int_T^0 [<u,L*_nu phi> +
/// <(u.grad)u, phi>] ds per divergence-free test field.
std::vector<WeakFormReport> weak_form_residual(const SolutionHistory& sol,
                                               const SolveConfig& cfg,
                                               const std::vector<PeriodicField>& test_fields);

/// Repeated local solves restarting from the terminal slice until the total
/// horizon is covered. Before each restart the re-entry condition
/// ||grad u_T*||_p <= ||grad u_leg0||_p is checked; three consecutive
/// failures abort with a viscosity-too-small report.
SolutionHistory continue_global(const PeriodicField& u0, const SolveConfig& cfg,
                                double total_horizon);

}  // namespace fnse

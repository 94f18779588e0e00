#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "fnse/field.hpp"
#include "fnse/flow.hpp"
#include "fnse/levy.hpp"
#include "fnse/mc.hpp"

namespace fnse {

/// Backward transport problem: terminal data phi at time 0, drift u on [T,0],
/// optional scalar potential c, viscous Levy generator (symbol, viscosity).
struct PideProblem {
  VelocityHistory u;
  PeriodicField phi;
  LevySymbol symbol;
  double viscosity = 1.0;
  std::optional<FieldHistory> potential;  // scalar c_t; absent means c = 0

  void validate() const;
};

struct FkOptions {
  double dt = 1e-3;
  InterpMode interpolation = InterpMode::linear;
  std::uint64_t stream = 0;
};

/// Builds the flow configuration matching a problem (exact-stable sampling
/// for isotropic symbols, compound-Poisson otherwise).
FlowConfig flow_config_for(const PideProblem& prob, const FkOptions& opt);

struct VectorEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd stderr_;
  std::size_t n = 0;
};

/// h_t(x) = E[ exp(int_t^0 c_r(X_r) dr) phi(X_{t,0}(x)) ] by Monte Carlo,
/// the potential integral accumulated by the same Euler steps as the flow.
VectorEstimate estimate_h(const PideProblem& prob, const Eigen::VectorXd& x, double t, int M,
                          const FkOptions& opt = {});

struct FieldEstimate {
  PeriodicField mean;
  PeriodicField stderr_;  // per component, of the raw node averages
};

/// w_t = E[grad^T X_{t,0} . phi(X_{t,0})] on the grid, optionally Leray
/// projected. At t = 0 this is phi itself.
FieldEstimate estimate_w(const PideProblem& prob, double t, int M, bool project,
                         const FkOptions& opt = {});

/// The gradient representation: d_i w = P E[grad^T X (grad phi - grad^T phi)
/// (X) d_i X], tensor components (j,i) at j*d+i. Shares flow samples with
/// estimate_w when both are requested through estimate_w_pair.
FieldEstimate estimate_grad_w(const PideProblem& prob, double t, int M,
                              const FkOptions& opt = {});

struct WPairEstimate {
  FieldEstimate w;
  FieldEstimate grad_w;
};

/// Both transports from one set of flow samples (common random numbers).
WPairEstimate estimate_w_pair(const PideProblem& prob, double t, int M, bool project,
                              const FkOptions& opt = {});

struct MildSolution {
  std::vector<double> times;          // 0 = t_0 > ... > t_K = T
  std::vector<PeriodicField> slices;  // h at those times
  int iterations = 0;
  double final_diff = 0.0;
  bool converged = false;
};

/// Thrown when the mild fixed-point map is observed to expand.
struct HorizonTooLongError : std::runtime_error {
  explicit HorizonTooLongError(double factor)
      : std::runtime_error("mild_solve: fixed-point map diverges (growth factor " +
                           std::to_string(factor) + "); shorten the horizon"),
        growth_factor(factor) {}
  double growth_factor;
};

/// Deterministic fixed-point iteration on the Duhamel form
///   h_t = T^nu_t phi + int_t^0 T^nu_{t-s} ((u_s.grad) h_s + c_s h_s) ds
/// with trapezoidal time quadrature, until the successive sup-norm difference
/// drops below 1e-10 or 200 iterations. Serves as the deterministic oracle
/// for estimate_h.
MildSolution mild_solve(const PideProblem& prob, double horizon, int time_steps);

struct ResidualReport {
  double time;
  double l2;
  double max;
};

/// Backward-equation residual d_t h + L_nu h + (u.grad) h + c h on interior
/// slices (central time differences).
std::vector<ResidualReport> pide_residual(const std::vector<double>& times,
                                          const std::vector<PeriodicField>& h,
                                          const PideProblem& prob);

}  // namespace fnse

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fnse/field.hpp"
#include "fnse/levy.hpp"
#include "fnse/mc.hpp"
#include "fnse/spectral.hpp"

namespace fnse {

/// Euler-Maruyama configuration for the backward particle flow. The noise
/// flag is a test hook; deterministic-drift oracles run with it off.
struct FlowConfig {
  double dt = 1e-3;
  double viscosity = 1.0;
  IncrementSampler sampler;
  InterpMode interpolation = InterpMode::linear;
  bool noise = true;

  void validate(int dim) const;
};

/// One realized pair (X_{t,0}(x), grad X_{t,0}(x)).
///
/// grad_drift_integral accumulates int |grad u_r(X_r)| dr along the path,
/// with |.| the spectral matrix norm; it feeds the exponential-moment
/// horizon diagnostic.
struct FlowSample {
  Eigen::VectorXd position;
  Eigen::MatrixXd jacobian;
  double grad_drift_integral = 0.0;
  double potential_integral = 0.0;
  bool has_integrals = false;
};

/// Spectral (operator 2-) norm of a small matrix, d <= 3.
double matrix_opnorm(const Eigen::Ref<const Eigen::MatrixXd>& m);

/// Integrates X' = u(s,X) ds + nu^{1/alpha} dL and J' = grad u(s,X) J ds from
/// time t < 0 up to t_end (default 0), steps aligned to the global ladder
/// {m dt}, so split integrations see the same increments as a single run.
/// Jumps do not enter the Jacobian (additive noise). When a potential history
/// is given, int c(s,X) ds is accumulated with the same left-endpoint rule.
FlowSample integrate_flow(const Eigen::VectorXd& x0, double t, const VelocityHistory& u,
                          const FlowConfig& cfg, std::uint64_t sample_key,
                          const FieldHistory* potential = nullptr, double t_end = 0.0);

/// Same stepping with callable drift/gradient (test hook for non-periodic
/// drifts such as frozen linear fields).
FlowSample integrate_flow_fn(
    const Eigen::VectorXd& x0, double t,
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& drift,
    const std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)>& drift_grad,
    const FlowConfig& cfg, std::uint64_t sample_key);

struct EnsembleSummary {
  Eigen::VectorXd mean_position;
  Eigen::VectorXd se_position;
  Eigen::MatrixXd mean_jacobian;
  Eigen::MatrixXd se_jacobian;
  McEstimate det_jacobian;
  /// E |grad X|^4 in the spectral norm; stays at or below 2 whenever the
  /// exponential-moment diagnostic accepts the horizon.
  McEstimate jacobian_fourth_moment;
  std::size_t samples = 0;
};

/// M independent samples (keys base_key..base_key+M-1); the summary is
/// reduced in sample order, so it is identical under any worker count.
std::vector<FlowSample> flow_ensemble(const Eigen::VectorXd& x0, double t,
                                      const VelocityHistory& u, const FlowConfig& cfg, int M,
                                      std::uint64_t base_key = 0,
                                      EnsembleSummary* summary = nullptr);

struct ExpMomentReport {
  McEstimate estimate;
  bool exceeds_threshold = false;  // above 2: the solver should shrink |T|
};

/// E exp(gamma int |grad u_r(X_r)| dr) from cached path integrals.
ExpMomentReport exp_moment_diagnostic(std::span<const FlowSample> samples, double gamma);

/// Grid-ensemble transport estimators: per node x, Monte Carlo averages over
/// M flows started at (t, x). One pass serves the velocity transport
/// J^T phi(X), the antisymmetrized gradient transport J^T B(X) J, and the
/// plain average phi(X); requesting several reuses the same flow samples
/// (common random numbers).
struct NodeEnsembleOptions {
  int samples_per_node = 100;
  std::uint64_t stream = 0;
  bool want_transport = true;
  const PeriodicField* grad_phi_antisym = nullptr;  // B = grad phi - grad^T phi
  bool want_plain = false;
  /// Share increments across nodes: the estimated field becomes a smooth
  /// random map evaluation, cutting the gradient noise of derived fields.
  bool crn_across_nodes = false;
  double exp_moment_gamma = 0.0;
};

struct NodeEnsembleResult {
  Eigen::MatrixXd transport_mean, transport_se;  // nodes x d
  Eigen::MatrixXd grad_mean, grad_se;            // nodes x d*d, entry (j,i) at j*d+i
  Eigen::MatrixXd plain_mean, plain_se;          // nodes x comps(phi)
  double exp_moment_max = 0.0;                   // max over nodes of node means
  McEstimate exp_moment_pooled;
};

NodeEnsembleResult node_ensemble(const VelocityHistory& u, const PeriodicField& phi, double t,
                                 const FlowConfig& cfg, const NodeEnsembleOptions& options);

}  // namespace fnse

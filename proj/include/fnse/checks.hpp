#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "fnse/field.hpp"
#include "fnse/feynman_kac.hpp"
#include "fnse/levy.hpp"
#include "fnse/mc.hpp"

namespace fnse {

/// Heat-kernel scaling of the truncated process at cutoff a = |t|^{1/alpha}:
/// histogram density estimates, the weighted tail supremum, its stability
/// under sample doubling, and the central-density slope across t.
struct KernelTailReport {
  struct PerT {
    double t = 0.0;
    double bin_width = 0.0;
    double density0 = 0.0;     // density at the origin
    double tail_sup = 0.0;     // sup over bins of p(x) |t|^{d/a} (1+|t|^{-1/a}|x|)^{d+1}
    bool widen_bins = false;   // thin tail bins excluded from the sup
  };
  std::vector<PerT> per_t;
  double tail_doubling_change = 0.0;  // relative change of tail_sup at 2M
  bool tail_stable = false;           // change below 20%
  double central_slope = 0.0;         // log density0 vs log |t|
  double slope_target = 0.0;          // -d/alpha
  bool slope_pass = false;            // within 0.1
  bool symmetric = false;             // densities even within 4 bin stderr
  bool pass = false;
};

KernelTailReport kernel_tail_check(double alpha, double sigma, int dim,
                                   std::span<const double> t_values, long samples,
                                   std::uint64_t seed);

/// Gradient gain of the semigroup over the worst-case single-mode family:
/// slope of log max_k ||grad T^nu_t e_k||_p vs log(nu |t|), and the collapse
/// of curves across viscosities onto one function of nu |t|.
struct SmoothingReport {
  struct Point {
    double nu, t, ratio;
  };
  std::vector<Point> points;
  double slope = 0.0;
  bool slope_pass = false;       // -1/alpha within 0.1
  double collapse_spread = 0.0;  // worst relative spread among equal nu|t|
  bool collapse_pass = false;    // at most 10%
  bool pass = false;
};

SmoothingReport semigroup_smoothing_check(const LevySymbol& symbol, const PeriodicGrid& grid,
                                          std::span<const double> viscosities,
                                          std::span<const double> t_values, double p);

/// Gradient decay of g_t = E phi(X_{t,0}) under a bounded drift. Monte Carlo
/// per grid node with increments shared across nodes (the estimate is then a
/// smooth random map, which keeps the differentiated noise at the level of
/// the pathwise gradients). Points where the estimated noise exceeds 10% of
/// the signal are excluded and reported as unusable.
struct GradientCheckReport {
  struct Point {
    double nu, t, grad_sup, noise_estimate;
    bool usable;
  };
  std::vector<Point> points;
  double slope = 0.0;
  bool slope_pass = false;  // -1/alpha within 0.15 over usable points
  int usable_points = 0;
  bool pass = false;
};

GradientCheckReport sde_gradient_check(const VelocityHistory& u, const LevySymbol& symbol,
                                       std::span<const double> viscosities,
                                       std::span<const double> t_values,
                                       const PeriodicField& phi, int samples_per_node,
                                       double dt, std::uint64_t seed);

/// One-sided Krylov check: E int_t^0 f(X_r) dr against ||f||_{L^q L^p},
/// stability of the ratio under sample doubling.
struct KrylovReport {
  McEstimate path_integral;
  double norm_qp = 0.0;
  double ratio = 0.0;
  double ratio_doubled = 0.0;
  bool stable = false;  // doubling moves the ratio by less than 25%
};

KrylovReport krylov_check(const VelocityHistory& u, const PeriodicField& f,
                          const LevySymbol& symbol, double viscosity, double t, int samples,
                          double p, double q, double dt, std::uint64_t seed);

/// Gradient decay of the mild solution: the worst-case gain
/// max_k ||grad h_t||_p / ||phi_k||_p over single-mode terminal data phi_k,
/// solved through mild_solve for each (nu, t). This realizes the operator
/// bound's exponent; a generic rough phi spreads energy across frequencies
/// and decays strictly faster. Configurations where the fixed point diverges
/// are skipped and reported as unusable.
struct MildGradientReport {
  struct Point {
    double nu, t, grad_gain;
    bool usable;
  };
  std::vector<Point> points;
  double slope = 0.0;
  bool slope_pass = false;  // -1/alpha within 0.1
  bool pass = false;
};

MildGradientReport mild_gradient_bound_check(const PeriodicField& u_slice,
                                             const LevySymbol& symbol,
                                             std::span<const double> viscosities,
                                             std::span<const double> t_values, int time_steps,
                                             double p);

}  // namespace fnse

#pragma once

#include <Eigen/Dense>

#include "fnse/field.hpp"
#include "fnse/levy.hpp"

namespace fnse {

enum class InterpMode { spectral, linear };

/// Exact derivative of the trigonometric interpolant; the Nyquist mode's
/// derivative is set to zero. Output component i*d + j holds d_j f_i.
PeriodicField spectral_gradient(const PeriodicField& f);

/// Trace of the gradient of a d-component field.
PeriodicField divergence(const PeriodicField& u);

/// Leray-Hodge projection onto divergence-free fields: per mode k != 0 the
/// coefficient is multiplied by (I - k k^T/|k|^2); the mean mode passes
/// through unchanged. The result is flagged divergence-free.
PeriodicField leray_project(const PeriodicField& u);

/// max |div u| over nodes.
double max_divergence(const PeriodicField& u);

/// Semigroup of the viscous generator: multiplier exp(t psi(nu^{1/alpha} k))
/// per mode, t <= 0. For the isotropic symbol this is exp(t nu sigma |k|^alpha).
PeriodicField semigroup_apply(const PeriodicField& f, double t, const LevySymbol& symbol,
                              double viscosity);

/// Generator L_nu as a Fourier multiplier, signed so that semigroup_apply is
/// its semigroup for t <= 0 (multiplier -psi(nu^{1/alpha} k)).
PeriodicField generator_apply(const PeriodicField& f, const LevySymbol& symbol, double viscosity);

/// Dual generator L*_nu (conjugate symbol; identical for the symmetric
/// measures built here, kept separate so the weak form reads as written).
PeriodicField generator_apply_dual(const PeriodicField& f, const LevySymbol& symbol,
                                   double viscosity);

/// Point evaluation. x is wrapped into [0,2pi)^d. Spectral mode sums the
/// Fourier series (Nyquist handled as a cosine); linear mode is multilinear.
Eigen::VectorXd interpolate(const PeriodicField& f, const Eigen::VectorXd& x,
                            InterpMode mode = InterpMode::spectral);

/// Grid-quadrature L^p norm of grad^order f (order 0 or 1), p in [1, inf].
/// Pointwise magnitude is the Euclidean/Frobenius norm across components;
/// the first-order norm is reported as ||grad f||_p alone. The infinity norm
/// is the grid max, a lower bound of the true sup.
double sobolev_norm(const PeriodicField& f, int order, double p);

/// L^p norm (order 0 shortcut).
double lp_norm(const PeriodicField& f, double p);

/// Grid inner product h^d sum_i a_i . b_i.
double inner_product(const PeriodicField& a, const PeriodicField& b);

/// Subtracts the mean of every component.
PeriodicField mean_subtract(const PeriodicField& f);

/// Zeroes all modes with |k_j| > N/3 on any axis (2/3 dealiasing rule).
PeriodicField dealias_two_thirds(const PeriodicField& f);

/// Field of iid N(0,1) node values (deterministic in the stream).
PeriodicField white_noise_field(const PeriodicGrid& grid, int comps, std::uint64_t stream);

/// Random field with modes only in |k_j| <= band, unit-normalized.
PeriodicField band_limited_field(const PeriodicGrid& grid, int comps, int band,
                                 std::uint64_t stream);

/// Taylor-Green vortex (sin x1 cos x2, -cos x1 sin x2) scaled by amplitude; d = 2.
PeriodicField taylor_green(const PeriodicGrid& grid, double amplitude = 1.0);

/// amplitude * cos(k.x) e. Divergence-free when e is orthogonal to k.
PeriodicField single_mode(const PeriodicGrid& grid, const Eigen::VectorXd& k,
                          const Eigen::VectorXd& e, double amplitude);

}  // namespace fnse

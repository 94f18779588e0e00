#pragma once

#include <vector>

#include "fnse/field.hpp"
#include "fnse/levy.hpp"

namespace fnse {

/// Time-indexed output on the backward ladder 0 = t_0 > ... > t_K = horizon.
struct SpectralRun {
  std::vector<double> times;
  std::vector<PeriodicField> fields;
};

/// Pseudo-spectral reference for the d = 2 backward equation with terminal
/// data u0 at time 0: integrating-factor RK4 in Fourier space (dissipation
/// multiplier exact), 2/3-rule dealiasing, Leray projection per stage. The
/// backward interval is integrated in its reflected forward form; dt_ref
/// caps the internal step (snapped to divide the save interval).
SpectralRun solve_fnse_spectral(const PeriodicField& u0, const LevySymbol& symbol,
                                double viscosity, double horizon, double dt_ref,
                                int save_slices);

/// d = 1 fractal Burgers reference, conservative form d_x(u^2/2), no
/// projection, same reflected convention.
SpectralRun solve_burgers_spectral(const PeriodicField& u0, const LevySymbol& symbol,
                                   double viscosity, double horizon, double dt_ref,
                                   int save_slices);

/// Relative L^p errors ||a_t - b_t||_p / max(||a_t||_p, 1e-14) at a's slice
/// times; b is interpolated linearly in time where the ladders differ.
std::vector<double> compare_fields(const SpectralRun& a, const SpectralRun& b, double p);

}  // namespace fnse

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "fnse/grid.hpp"

namespace fnse {

/// Real field sampled at the grid nodes, with its discrete Fourier transform
/// cached at construction. Immutable value type: all operations on fields are
/// pure functions returning new fields, so concurrent reads are safe.
///
/// comps = 1 for scalars, d for vectors, d*d for gradients (entry (i,j) =
/// d_j f_i stored at component i*d + j).
class PeriodicField {
 public:
  PeriodicField(const PeriodicGrid& grid, Eigen::MatrixXd values, bool divergence_free = false);

  static PeriodicField zero(const PeriodicGrid& grid, int comps);
  static PeriodicField constant(const PeriodicGrid& grid, const Eigen::VectorXd& value);
  /// Samples fn(x) -> comps values at every node.
  static PeriodicField from_function(const PeriodicGrid& grid, int comps,
                                     const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn);
  /// Inverse transform; imaginary residue of the synthesis is discarded.
  static PeriodicField from_coeffs(const PeriodicGrid& grid, const Eigen::MatrixXcd& coeffs,
                                   bool divergence_free = false);

  const PeriodicGrid& grid() const { return grid_; }
  int comps() const { return int(values_.cols()); }
  Eigen::Index num_nodes() const { return values_.rows(); }

  /// Node values, (num_nodes x comps).
  const Eigen::MatrixXd& values() const { return values_; }
  /// Fourier coefficients c_k with f(x) = sum_k c_k exp(i k.x), same layout.
  const Eigen::MatrixXcd& coeffs() const { return coeffs_; }

  bool divergence_free() const { return divergence_free_; }
  void set_divergence_free(bool flag) { divergence_free_ = flag; }

  double max_abs() const { return values_.array().abs().maxCoeff(); }

 private:
  PeriodicGrid grid_;
  Eigen::MatrixXd values_;
  Eigen::MatrixXcd coeffs_;
  bool divergence_free_ = false;
};

/// Forward DFT of node samples (normalized: output are Fourier coefficients).
Eigen::MatrixXcd dft_forward(const PeriodicGrid& grid, const Eigen::MatrixXd& values);
/// Inverse of dft_forward; returns complex synthesis values.
Eigen::MatrixXcd dft_inverse(const PeriodicGrid& grid, const Eigen::MatrixXcd& coeffs);

/// Time-indexed slices on a decreasing time ladder 0 = t_0 > t_1 > ... > t_K,
/// interpolated piecewise-linearly in time. Vector histories precompute the
/// gradient of every slice for the particle integrators.
class FieldHistory {
 public:
  FieldHistory(std::vector<double> times, std::vector<PeriodicField> slices,
               bool require_divergence_free, bool with_gradients);

  /// Constant-in-time history (two identical slices spanning [t_end, 0]).
  static FieldHistory frozen(const PeriodicField& slice, double t_end,
                             bool require_divergence_free, bool with_gradients);

  int num_slices() const { return int(times_.size()); }
  double time(int i) const { return times_[std::size_t(i)]; }
  const std::vector<double>& times() const { return times_; }
  double horizon() const { return times_.back(); }
  const PeriodicField& slice(int i) const { return slices_[std::size_t(i)]; }
  const PeriodicField& gradient_slice(int i) const;
  const PeriodicGrid& grid() const { return slices_.front().grid(); }
  int comps() const { return slices_.front().comps(); }

  /// Index i with t in [times[i+1], times[i]] and the linear blend weight
  /// theta such that f(t) = (1-theta) slice(i) + theta slice(i+1).
  void locate(double t, int& index, double& theta) const;

  /// Pointwise linear-in-time evaluation on the whole grid.
  Eigen::MatrixXd values_at(double t) const;

 private:
  std::vector<double> times_;
  std::vector<PeriodicField> slices_;
  std::vector<PeriodicField> gradients_;
};

/// Divergence-free velocity history driving the particle SDE.
using VelocityHistory = FieldHistory;

}  // namespace fnse

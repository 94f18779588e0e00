#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fnse {

inline constexpr double kTwoPi = 6.28318530717958647692;

inline double wrap_twopi(double x) {
  double y = x - kTwoPi * std::floor(x / kTwoPi);
  if (y >= kTwoPi) y -= kTwoPi;
  return y;
}

/// Uniform grid over the periodic box [0,2pi)^d, N nodes per axis.
/// Flat node index is row-major with the last axis fastest.
struct PeriodicGrid {
  int dim = 2;
  int n = 32;

  PeriodicGrid() = default;
  PeriodicGrid(int dim_, int n_) : dim(dim_), n(n_) { validate(); }

  void validate() const {
    if (dim < 1 || dim > 3) throw std::invalid_argument("PeriodicGrid: dim must be 1, 2 or 3");
    if (n < 4 || (n & (n - 1)) != 0)
      throw std::invalid_argument("PeriodicGrid: n must be a power of two, at least 4");
  }

  double spacing() const { return kTwoPi / n; }

  Eigen::Index num_nodes() const {
    Eigen::Index m = 1;
    for (int a = 0; a < dim; ++a) m *= n;
    return m;
  }

  std::array<int, 3> unflatten(Eigen::Index flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      idx[std::size_t(a)] = int(flat % n);
      flat /= n;
    }
    return idx;
  }

  Eigen::Index flatten(const std::array<int, 3>& idx) const {
    Eigen::Index flat = 0;
    for (int a = 0; a < dim; ++a) flat = flat * n + idx[std::size_t(a)];
    return flat;
  }

  Eigen::VectorXd node(Eigen::Index flat) const {
    const auto idx = unflatten(flat);
    Eigen::VectorXd x(dim);
    for (int a = 0; a < dim; ++a) x[a] = spacing() * idx[std::size_t(a)];
    return x;
  }

  /// Signed wavenumber of DFT bin j along one axis: 0..N/2-1, then -N/2..-1.
  int wavenumber(int bin) const { return bin < n / 2 ? bin : bin - n; }

  bool operator==(const PeriodicGrid& o) const { return dim == o.dim && n == o.n; }
  bool operator!=(const PeriodicGrid& o) const { return !(*this == o); }
};

}  // namespace fnse

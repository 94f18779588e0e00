#pragma once

// Test-side oracles, independent of the library's implementation paths.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
  const double coarse = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double fine = (b - a) / 12.0 * (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(fine - coarse) < 15.0 * tol) return fine + (fine - coarse) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int depth = 34) {
  if (b <= a) return 0.0;
  return simpson_rec(f, a, b, f(a), f(0.5 * (a + b)), f(b), tol, depth);
}

/// Truncated-symbol integral int_{0<|y|<=a} (1 - cos(xi.y)) nu(dy) for the
/// stable density sigma*c(d,alpha)|y|^{-d-alpha}, by direct quadrature over
/// the (r, angle) domain -- no Bessel reduction. The r^{1-alpha} endpoint
/// singularity is removed by the substitution r = v^2 on a short head.
inline double truncated_symbol_radial(int dim, double xi_norm, double alpha, double sigma,
                                      double a, double density_constant) {
  // 1 - cos(x) evaluated as 2 sin^2(x/2): exact identity, no cancellation
  auto one_minus_cos = [](double x) {
    const double s = std::sin(0.5 * x);
    return 2.0 * s * s;
  };
  auto angular = [&](double r) {
    const double s = r * xi_norm;
    if (dim == 1) return 2.0 * one_minus_cos(s);
    auto f = [&](double th) { return one_minus_cos(s * std::cos(th)); };
    // tolerance scales with the s^2 magnitude of the integrand: the result is
    // later multiplied by r^{-1-alpha}, so absolute inner error would blow up
    const double tol = 1e-13 * std::min(1.0, s * s);
    return 2.0 * integrate(f, 0.0, M_PI, std::max(tol, 1e-300), 22);  // symmetric in theta
  };
  auto radial = [&](double r) { return angular(r) * std::pow(r, -1.0 - alpha); };
  const double split = std::min(a, 0.01);
  auto head = [&](double v) { return v <= 0.0 ? 0.0 : radial(v * v) * 2.0 * v; };
  return sigma * density_constant *
         (integrate(head, 0.0, std::sqrt(split), 1e-13, 26) +
          integrate(radial, split, a, 1e-12, 26));
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) ++i; else ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

/// Critical value at significance level 0.01.
inline double ks_critical_01(std::size_t n, std::size_t m) {
  return 1.628 * std::sqrt(double(n + m) / (double(n) * double(m)));
}

/// Centered 8th-order finite-difference derivative along one axis of a
/// periodic nodal array.
inline double fd8_derivative(const std::function<double(int)>& nodal, int i, int n, double h) {
  auto at = [&](int off) { return nodal(((i + off) % n + n) % n); };
  const double num = (4.0 / 5.0) * (at(1) - at(-1)) - (1.0 / 5.0) * (at(2) - at(-2)) +
                     (4.0 / 105.0) * (at(3) - at(-3)) - (1.0 / 280.0) * (at(4) - at(-4));
  return num / h;
}

/// Naive full Fourier synthesis at one point (triple loop, no factorization).
inline double direct_fourier_sum(const Eigen::VectorXcd& coeffs,
                                 const std::function<Eigen::VectorXd(Eigen::Index)>& mode_of,
                                 const Eigen::VectorXd& x) {
  std::complex<double> acc(0.0, 0.0);
  for (Eigen::Index m = 0; m < coeffs.size(); ++m) {
    const Eigen::VectorXd k = mode_of(m);
    acc += coeffs[m] * std::exp(std::complex<double>(0.0, k.dot(x)));
  }
  return acc.real();
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line through (x, y).
inline SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  SlopeFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace oracles

#include "fnse/spectral.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>

#include "fnse/rng.hpp"

namespace fnse {

namespace {

using Cx = std::complex<double>;

// Wavenumber vector of a flat mode index.
inline void mode_of(const PeriodicGrid& g, Eigen::Index flat, int* k) {
  const auto idx = g.unflatten(flat);
  for (int a = 0; a < g.dim; ++a) k[a] = g.wavenumber(idx[std::size_t(a)]);
}

}  // namespace

PeriodicField spectral_gradient(const PeriodicField& f) {
  const PeriodicGrid& g = f.grid();
  const int d = g.dim, c = f.comps();
  const int nyquist = -g.n / 2;
  Eigen::MatrixXcd out(f.num_nodes(), c * d);
  int k[3];
  for (Eigen::Index m = 0; m < f.num_nodes(); ++m) {
    mode_of(g, m, k);
    for (int j = 0; j < d; ++j) {
      const Cx ik = (k[j] == nyquist) ? Cx(0, 0) : Cx(0, double(k[j]));
      for (int ci = 0; ci < c; ++ci) out(m, ci * d + j) = ik * f.coeffs()(m, ci);
    }
  }
  return PeriodicField::from_coeffs(g, out);
}

PeriodicField divergence(const PeriodicField& u) {
  const PeriodicGrid& g = u.grid();
  const int d = g.dim;
  if (u.comps() != d) throw std::invalid_argument("divergence: expected a d-component field");
  const int nyquist = -g.n / 2;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(u.num_nodes(), 1);
  int k[3];
  for (Eigen::Index m = 0; m < u.num_nodes(); ++m) {
    mode_of(g, m, k);
    Cx acc(0, 0);
    for (int j = 0; j < d; ++j) {
      if (k[j] != nyquist) acc += Cx(0, double(k[j])) * u.coeffs()(m, j);
    }
    out(m, 0) = acc;
  }
  return PeriodicField::from_coeffs(g, out);
}

double max_divergence(const PeriodicField& u) {
  return divergence(u).max_abs();
}

PeriodicField leray_project(const PeriodicField& u) {
  const PeriodicGrid& g = u.grid();
  const int d = g.dim;
  if (u.comps() != d) throw std::invalid_argument("leray_project: expected a d-component field");
  const int nyquist = -g.n / 2;
  Eigen::MatrixXcd out = u.coeffs();
  int k[3];
  for (Eigen::Index m = 0; m < u.num_nodes(); ++m) {
    mode_of(g, m, k);
    // same effective wavenumbers as the derivative convention: the Nyquist
    // mode differentiates to zero, so it must not enter the projector either
    for (int j = 0; j < d; ++j)
      if (k[j] == nyquist) k[j] = 0;
    double k2 = 0.0;
    for (int j = 0; j < d; ++j) k2 += double(k[j]) * double(k[j]);
    if (k2 == 0.0) continue;  // mean mode passes through
    Cx kdot(0, 0);
    for (int j = 0; j < d; ++j) kdot += double(k[j]) * out(m, j);
    kdot /= k2;
    for (int j = 0; j < d; ++j) out(m, j) -= double(k[j]) * kdot;
  }
  return PeriodicField::from_coeffs(g, out, /*divergence_free=*/true);
}

namespace {

// psi(nu^{1/alpha} |k|) per mode, cached over the distinct |k|^2 of the grid.
class SymbolTable {
 public:
  SymbolTable(const LevySymbol& sym, double nu, int dim)
      : sym_(sym), scale_(std::pow(nu, 1.0 / sym.alpha)), dim_(dim) {}

  double operator()(double k2) {
    auto it = cache_.find(k2);
    if (it != cache_.end()) return it->second;
    const double v = symbol_eval_radial(sym_, scale_ * std::sqrt(k2), dim_);
    cache_.emplace(k2, v);
    return v;
  }

 private:
  LevySymbol sym_;
  double scale_;
  int dim_;
  std::map<double, double> cache_;
};

PeriodicField apply_multiplier(const PeriodicField& f, const LevySymbol& symbol, double viscosity,
                               const std::function<Cx(double /*psi*/)>& factor) {
  symbol.validate();
  if (!(viscosity >= 1.0)) throw std::invalid_argument("viscous multiplier: viscosity must be >= 1");
  const PeriodicGrid& g = f.grid();
  SymbolTable psi(symbol, viscosity, g.dim);
  Eigen::MatrixXcd out = f.coeffs();
  int k[3];
  for (Eigen::Index m = 0; m < f.num_nodes(); ++m) {
    mode_of(g, m, k);
    double k2 = 0.0;
    for (int j = 0; j < g.dim; ++j) k2 += double(k[j]) * double(k[j]);
    const Cx fac = factor(psi(k2));
    out.row(m) *= fac;
  }
  return PeriodicField::from_coeffs(g, out, f.divergence_free());
}

}  // namespace

PeriodicField semigroup_apply(const PeriodicField& f, double t, const LevySymbol& symbol,
                              double viscosity) {
  if (t > 0.0) throw std::invalid_argument("semigroup_apply: t must be <= 0 (backward time)");
  return apply_multiplier(f, symbol, viscosity,
                          [t](double psi) { return Cx(std::exp(t * psi), 0.0); });
}

PeriodicField generator_apply(const PeriodicField& f, const LevySymbol& symbol, double viscosity) {
  return apply_multiplier(f, symbol, viscosity, [](double psi) { return Cx(-psi, 0.0); });
}

PeriodicField generator_apply_dual(const PeriodicField& f, const LevySymbol& symbol,
                                   double viscosity) {
  // both built-in measures are symmetric: psi is real and the dual equals L_nu
  return apply_multiplier(f, symbol, viscosity,
                          [](double psi) { return std::conj(Cx(-psi, 0.0)); });
}

namespace {

inline double wrap_coord(double x) {
  double y = std::fmod(x, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  return y;
}

Eigen::VectorXd interpolate_linear(const PeriodicField& f, const Eigen::VectorXd& xw) {
  const PeriodicGrid& g = f.grid();
  const int d = g.dim;
  const double h = g.spacing();
  int base[3];
  double w[3];
  for (int a = 0; a < d; ++a) {
    const double u = xw[a] / h;
    base[a] = int(std::floor(u)) % g.n;
    w[a] = u - std::floor(u);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(f.comps());
  const int corners = 1 << d;
  for (int s = 0; s < corners; ++s) {
    double weight = 1.0;
    std::array<int, 3> idx{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      const int off = (s >> a) & 1;
      weight *= off ? w[a] : 1.0 - w[a];
      idx[std::size_t(a)] = (base[a] + off) % g.n;
    }
    out += weight * f.values().row(g.flatten(idx)).transpose();
  }
  return out;
}

Eigen::VectorXd interpolate_spectral(const PeriodicField& f, const Eigen::VectorXd& xw) {
  const PeriodicGrid& g = f.grid();
  const int d = g.dim, n = g.n;
  const int nyquist = -n / 2;
  // per-axis phases e^{i k x}; the Nyquist bin contributes cos(n x / 2)
  Eigen::MatrixXcd phase(n, d);
  for (int a = 0; a < d; ++a) {
    for (int bin = 0; bin < n; ++bin) {
      const int k = g.wavenumber(bin);
      phase(bin, a) = (k == nyquist) ? Cx(std::cos(0.5 * n * xw[a]), 0.0)
                                     : std::exp(Cx(0.0, k * xw[a]));
    }
  }
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(f.comps());
  for (Eigen::Index m = 0; m < f.num_nodes(); ++m) {
    const auto idx = g.unflatten(m);
    Cx p = phase(idx[0], 0);
    for (int a = 1; a < d; ++a) p *= phase(idx[std::size_t(a)], a);
    acc += p * f.coeffs().row(m).transpose();
  }
  return acc.real();
}

}  // namespace

Eigen::VectorXd interpolate(const PeriodicField& f, const Eigen::VectorXd& x, InterpMode mode) {
  if (x.size() != f.grid().dim) throw std::invalid_argument("interpolate: wrong point dimension");
  Eigen::VectorXd xw(x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) xw[a] = wrap_coord(x[a]);
  return mode == InterpMode::linear ? interpolate_linear(f, xw) : interpolate_spectral(f, xw);
}

double lp_norm(const PeriodicField& f, double p) {
  const Eigen::ArrayXd mag = f.values().rowwise().norm().array();
  if (std::isinf(p)) return mag.maxCoeff();
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  const double hd = std::pow(f.grid().spacing(), f.grid().dim);
  return std::pow(hd * mag.pow(p).sum(), 1.0 / p);
}

double sobolev_norm(const PeriodicField& f, int order, double p) {
  if (order == 0) return lp_norm(f, p);
  if (order == 1) return lp_norm(spectral_gradient(f), p);
  throw std::invalid_argument("sobolev_norm: order must be 0 or 1");
}

double inner_product(const PeriodicField& a, const PeriodicField& b) {
  if (a.grid() != b.grid() || a.comps() != b.comps())
    throw std::invalid_argument("inner_product: mismatched fields");
  const double hd = std::pow(a.grid().spacing(), a.grid().dim);
  return hd * a.values().cwiseProduct(b.values()).sum();
}

PeriodicField mean_subtract(const PeriodicField& f) {
  Eigen::MatrixXd v = f.values();
  for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c).array() -= v.col(c).mean();
  return PeriodicField(f.grid(), std::move(v), f.divergence_free());
}

PeriodicField dealias_two_thirds(const PeriodicField& f) {
  const PeriodicGrid& g = f.grid();
  const int cut = g.n / 3;
  Eigen::MatrixXcd out = f.coeffs();
  int k[3];
  for (Eigen::Index m = 0; m < f.num_nodes(); ++m) {
    mode_of(g, m, k);
    for (int a = 0; a < g.dim; ++a) {
      if (std::abs(k[a]) > cut) {
        out.row(m).setZero();
        break;
      }
    }
  }
  return PeriodicField::from_coeffs(g, out, f.divergence_free());
}

PeriodicField white_noise_field(const PeriodicGrid& grid, int comps, std::uint64_t stream) {
  Eigen::MatrixXd v(grid.num_nodes(), comps);
  for (Eigen::Index i = 0; i < grid.num_nodes(); ++i) {
    CounterRng rng(stream, std::uint64_t(i), 0);
    for (int c = 0; c < comps; ++c) v(i, c) = rng.gaussian();
  }
  return PeriodicField(grid, std::move(v));
}

PeriodicField band_limited_field(const PeriodicGrid& grid, int comps, int band,
                                 std::uint64_t stream) {
  if (band < 1 || band >= grid.n / 2)
    throw std::invalid_argument("band_limited_field: band must be in [1, n/2)");
  Eigen::MatrixXcd coeffs = Eigen::MatrixXcd::Zero(grid.num_nodes(), comps);
  int k[3];
  for (Eigen::Index m = 0; m < grid.num_nodes(); ++m) {
    mode_of(grid, m, k);
    bool inside = true;
    double k2 = 0.0;
    for (int a = 0; a < grid.dim; ++a) {
      inside = inside && std::abs(k[a]) <= band;
      k2 += double(k[a]) * double(k[a]);
    }
    if (!inside || k2 == 0.0) continue;
    CounterRng rng(stream, std::uint64_t(m), 1);
    for (int c = 0; c < comps; ++c) {
      double re, im;
      rng.gaussian_pair(re, im);
      coeffs(m, c) = 0.5 * Cx(re, im);
    }
  }
  // Hermitian symmetrization makes the synthesis real
  std::array<int, 3> neg{0, 0, 0};
  for (Eigen::Index m = 0; m < grid.num_nodes(); ++m) {
    const auto idx = grid.unflatten(m);
    for (int a = 0; a < grid.dim; ++a)
      neg[std::size_t(a)] = (grid.n - idx[std::size_t(a)]) % grid.n;
    const Eigen::Index mm = grid.flatten(neg);
    if (mm > m) {
      for (int c = 0; c < comps; ++c) coeffs(mm, c) = std::conj(coeffs(m, c));
    } else if (mm == m) {
      for (int c = 0; c < comps; ++c) coeffs(m, c) = coeffs(m, c).real();
    }
  }
  PeriodicField raw = PeriodicField::from_coeffs(grid, coeffs);
  const double scale = raw.max_abs();
  if (scale <= 0.0) throw std::logic_error("band_limited_field: degenerate draw");
  return PeriodicField(grid, raw.values() / scale);
}

PeriodicField taylor_green(const PeriodicGrid& grid, double amplitude) {
  if (grid.dim != 2) throw std::invalid_argument("taylor_green: requires d = 2");
  return PeriodicField::from_function(grid, 2, [amplitude](const Eigen::VectorXd& x) {
    Eigen::Vector2d v(amplitude * std::sin(x[0]) * std::cos(x[1]),
                      -amplitude * std::cos(x[0]) * std::sin(x[1]));
    return Eigen::VectorXd(v);
  });
}

PeriodicField single_mode(const PeriodicGrid& grid, const Eigen::VectorXd& k,
                          const Eigen::VectorXd& e, double amplitude) {
  if (k.size() != grid.dim || e.size() != grid.dim)
    throw std::invalid_argument("single_mode: k and e must have the grid dimension");
  return PeriodicField::from_function(grid, grid.dim, [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(amplitude * std::cos(k.dot(x)) * e);
  });
}

}  // namespace fnse

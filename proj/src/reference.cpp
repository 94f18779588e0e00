#include "fnse/reference.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>

#include "fnse/spectral.hpp"

namespace fnse {

namespace {

using Cx = std::complex<double>;

struct ModeTables {
  Eigen::ArrayXd psi;          // psi(nu^{1/alpha} k) per mode
  Eigen::ArrayXd k[3];         // signed wavenumbers per axis
  Eigen::Array<bool, Eigen::Dynamic, 1> alias;  // |k_a| > n/3 on some axis
};

ModeTables build_tables(const PeriodicGrid& g, const LevySymbol& symbol, double viscosity) {
  ModeTables t;
  const Eigen::Index nn = g.num_nodes();
  t.psi.resize(nn);
  for (int a = 0; a < g.dim; ++a) t.k[a].resize(nn);
  t.alias.resize(nn);
  const double nu_scale = std::pow(viscosity, 1.0 / symbol.alpha);
  const int cut = g.n / 3;
  const int nyquist = -g.n / 2;
  std::map<double, double> cache;
  for (Eigen::Index m = 0; m < nn; ++m) {
    const auto idx = g.unflatten(m);
    double k2 = 0.0;
    bool alias = false;
    for (int a = 0; a < g.dim; ++a) {
      const int kk = g.wavenumber(idx[std::size_t(a)]);
      t.k[a][m] = kk == nyquist ? 0 : kk;  // derivative convention
      k2 += double(kk) * double(kk);
      alias = alias || std::abs(kk) > cut;
    }
    t.alias[m] = alias;
    auto it = cache.find(k2);
    if (it == cache.end())
      it = cache.emplace(k2, symbol_eval_radial(symbol, nu_scale * std::sqrt(k2), g.dim)).first;
    t.psi[m] = it->second;
  }
  return t;
}

void project_inplace(const ModeTables& t, int d, Eigen::MatrixXcd& v) {
  if (d < 2) return;
  for (Eigen::Index m = 0; m < v.rows(); ++m) {
    double k2 = 0.0;
    for (int a = 0; a < d; ++a) k2 += t.k[a][m] * t.k[a][m];
    if (k2 == 0.0) continue;
    Cx kdot(0, 0);
    for (int a = 0; a < d; ++a) kdot += t.k[a][m] * v(m, a);
    kdot /= k2;
    for (int a = 0; a < d; ++a) v(m, a) -= t.k[a][m] * kdot;
  }
}

void dealias_inplace(const ModeTables& t, Eigen::MatrixXcd& v) {
  for (Eigen::Index m = 0; m < v.rows(); ++m)
    if (t.alias[m]) v.row(m).setZero();
}

// Nonlinear term of the reflected forward equation, + P (v.grad) v for the
// momentum equation and + d_x(v^2/2) for Burgers, dealiased.
Eigen::MatrixXcd nonlinear_fnse(const PeriodicGrid& g, const ModeTables& t,
                                const Eigen::MatrixXcd& v_hat) {
  const int d = g.dim;
  Eigen::MatrixXcd vd = v_hat;
  dealias_inplace(t, vd);
  const Eigen::MatrixXd v = dft_inverse(g, vd).real();
  Eigen::MatrixXcd grad(g.num_nodes(), d * d);
  for (int c = 0; c < d; ++c)
    for (int a = 0; a < d; ++a)
      grad.col(c * d + a) =
          (vd.col(c).array() * (Cx(0, 1) * t.k[a].cast<Cx>())).matrix();
  const Eigen::MatrixXd gphys = dft_inverse(g, grad).real();
  Eigen::MatrixXd out(g.num_nodes(), d);
  for (int c = 0; c < d; ++c) {
    out.col(c).setZero();
    for (int a = 0; a < d; ++a)
      out.col(c) += v.col(a).cwiseProduct(gphys.col(c * d + a));
  }
  Eigen::MatrixXcd out_hat = dft_forward(g, out);
  dealias_inplace(t, out_hat);
  project_inplace(t, d, out_hat);
  return out_hat;
}

Eigen::MatrixXcd nonlinear_burgers(const PeriodicGrid& g, const ModeTables& t,
                                   const Eigen::MatrixXcd& v_hat) {
  Eigen::MatrixXcd vd = v_hat;
  dealias_inplace(t, vd);
  const Eigen::MatrixXd v = dft_inverse(g, vd).real();
  const Eigen::MatrixXd sq = 0.5 * v.array().square().matrix();
  Eigen::MatrixXcd out_hat = dft_forward(g, sq);
  out_hat.col(0) = (out_hat.col(0).array() * (Cx(0, 1) * t.k[0].cast<Cx>())).matrix();
  dealias_inplace(t, out_hat);
  return out_hat;
}

template <typename NonlinearFn>
SpectralRun run_spectral(const PeriodicField& u0, const LevySymbol& symbol, double viscosity,
                         double horizon, double dt_ref, int save_slices, bool project_field,
                         const NonlinearFn& nonlinear) {
  symbol.validate();
  if (!(horizon < 0.0)) throw std::invalid_argument("spectral reference: horizon must be < 0");
  if (!(dt_ref > 0.0)) throw std::invalid_argument("spectral reference: dt_ref must be > 0");
  if (save_slices < 1) throw std::invalid_argument("spectral reference: need >= 1 save slice");
  const PeriodicGrid& g = u0.grid();

  // advective CFL on the terminal data
  const double cfl = u0.max_abs() * dt_ref / g.spacing();
  if (cfl > 1.0)
    throw std::invalid_argument("spectral reference: advective CFL exceeded, reduce dt_ref");

  const ModeTables tables = build_tables(g, symbol, viscosity);
  const double slice_len = -horizon / save_slices;
  const int steps_per_slice = std::max(1, int(std::ceil(slice_len / dt_ref - 1e-12)));
  const double h = slice_len / steps_per_slice;

  const Eigen::ArrayXcd e_full = (-h * tables.psi).exp().cast<Cx>();
  const Eigen::ArrayXcd e_half = (-0.5 * h * tables.psi).exp().cast<Cx>();

  Eigen::MatrixXcd v = u0.coeffs();
  dealias_inplace(tables, v);
  if (project_field) project_inplace(tables, g.dim, v);

  SpectralRun run;
  run.times.push_back(0.0);
  run.fields.push_back(PeriodicField::from_coeffs(g, v, project_field));

  auto scale_rows = [](const Eigen::ArrayXcd& f, const Eigen::MatrixXcd& m) {
    return (m.array().colwise() * f).matrix();
  };

  for (int s = 1; s <= save_slices; ++s) {
    for (int step = 0; step < steps_per_slice; ++step) {
      // integrating-factor RK4 (Trefethen): u' = L u + N(u), L diagonal
      const Eigen::MatrixXcd n1 = nonlinear(g, tables, v);
      const Eigen::MatrixXcd a = scale_rows(e_half, v + 0.5 * h * n1);
      const Eigen::MatrixXcd n2 = nonlinear(g, tables, a);
      const Eigen::MatrixXcd b = scale_rows(e_half, v) + 0.5 * h * n2;
      const Eigen::MatrixXcd n3 = nonlinear(g, tables, b);
      const Eigen::MatrixXcd c = scale_rows(e_full, v) + h * scale_rows(e_half, n3);
      const Eigen::MatrixXcd n4 = nonlinear(g, tables, c);
      v = scale_rows(e_full, v) +
          (h / 6.0) * (scale_rows(e_full, n1) + 2.0 * scale_rows(e_half, n2 + n3) + n4);
    }
    run.times.push_back(-s * slice_len);
    run.fields.push_back(PeriodicField::from_coeffs(g, v, project_field));
  }
  return run;
}

}  // namespace

SpectralRun solve_fnse_spectral(const PeriodicField& u0, const LevySymbol& symbol,
                                double viscosity, double horizon, double dt_ref,
                                int save_slices) {
  if (u0.grid().dim != 2 || u0.comps() != 2)
    throw std::invalid_argument("solve_fnse_spectral: expects a 2-d vector field");
  if (max_divergence(u0) > 1e-8 * std::max(1.0, u0.max_abs()))
    throw std::invalid_argument("solve_fnse_spectral: u0 must be divergence-free");
  return run_spectral(u0, symbol, viscosity, horizon, dt_ref, save_slices, true,
                      nonlinear_fnse);
}

SpectralRun solve_burgers_spectral(const PeriodicField& u0, const LevySymbol& symbol,
                                   double viscosity, double horizon, double dt_ref,
                                   int save_slices) {
  if (u0.grid().dim != 1 || u0.comps() != 1)
    throw std::invalid_argument("solve_burgers_spectral: expects a 1-d scalar field");
  return run_spectral(u0, symbol, viscosity, horizon, dt_ref, save_slices, false,
                      nonlinear_burgers);
}

std::vector<double> compare_fields(const SpectralRun& a, const SpectralRun& b, double p) {
  if (a.fields.empty() || b.fields.empty())
    throw std::invalid_argument("compare_fields: empty runs");
  if (a.fields.front().grid() != b.fields.front().grid())
    throw std::invalid_argument("compare_fields: grid mismatch");
  std::vector<double> out;
  out.reserve(a.times.size());
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const double t = a.times[i];
    // locate the bracketing b slices (b.times descending from 0)
    std::size_t j = 0;
    while (j + 2 < b.times.size() && b.times[j + 1] > t) ++j;
    const double t0 = b.times[j], t1 = b.times[j + 1];
    if (t > t0 + 1e-12 || t < t1 - 1e-12)
      throw std::invalid_argument("compare_fields: time outside the compared run");
    const double theta = (t0 - t) / (t0 - t1);
    const Eigen::MatrixXd bv =
        (1.0 - theta) * b.fields[j].values() + theta * b.fields[j + 1].values();
    const PeriodicField diff(a.fields[i].grid(), a.fields[i].values() - bv);
    const double denom = std::max(lp_norm(a.fields[i], p), 1e-14);
    out.push_back(lp_norm(diff, p) / denom);
  }
  return out;
}

}  // namespace fnse

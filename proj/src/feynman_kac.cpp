#include "fnse/feynman_kac.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <stdexcept>

#include "fnse/parallel.hpp"
#include "fnse/spectral.hpp"

namespace fnse {

void PideProblem::validate() const {
  symbol.validate();
  if (!(viscosity >= 1.0)) throw std::invalid_argument("PideProblem: viscosity must be >= 1");
  if (phi.grid() != u.grid()) throw std::invalid_argument("PideProblem: phi grid mismatch");
  if (potential.has_value()) {
    if (potential->grid() != u.grid())
      throw std::invalid_argument("PideProblem: potential grid mismatch");
    if (potential->comps() != 1)
      throw std::invalid_argument("PideProblem: potential must be scalar");
  }
}

FlowConfig flow_config_for(const PideProblem& prob, const FkOptions& opt) {
  FlowConfig cfg;
  cfg.dt = opt.dt;
  cfg.viscosity = prob.viscosity;
  cfg.interpolation = opt.interpolation;
  cfg.sampler.symbol = prob.symbol;
  cfg.sampler.dim = prob.u.grid().dim;
  cfg.sampler.scheme = prob.symbol.kind == SymbolKind::isotropic_stable
                           ? SamplingScheme::exact_stable
                           : SamplingScheme::compound_poisson_gaussian;
  cfg.sampler.rng_stream = opt.stream;
  return cfg;
}

VectorEstimate estimate_h(const PideProblem& prob, const Eigen::VectorXd& x, double t, int M,
                          const FkOptions& opt) {
  prob.validate();
  if (M < 1) throw std::invalid_argument("estimate_h: need at least one sample");
  const int comps = prob.phi.comps();
  VectorEstimate est;
  est.mean.setZero(comps);
  est.stderr_.setZero(comps);
  est.n = std::size_t(M);
  if (t == 0.0) {
    est.mean = interpolate(prob.phi, x, opt.interpolation);
    return est;
  }
  const FlowConfig cfg = flow_config_for(prob, opt);
  const FieldHistory* c = prob.potential.has_value() ? &*prob.potential : nullptr;

  Eigen::MatrixXd vals(M, comps);
  parallel_for(std::size_t(M), [&](std::size_t i) {
    const auto s = integrate_flow(x, t, prob.u, cfg, std::uint64_t(i), c);
    const Eigen::VectorXd phix = interpolate(prob.phi, s.position, opt.interpolation);
    vals.row(Eigen::Index(i)) = std::exp(s.potential_integral) * phix.transpose();
  });
  for (int cc = 0; cc < comps; ++cc) {
    RunningStat st;
    for (int i = 0; i < M; ++i) st.add(vals(i, cc));
    est.mean[cc] = st.mean();
    est.stderr_[cc] = st.stderr_();
  }
  return est;
}

namespace {

PeriodicField antisym_gradient(const PeriodicField& phi) {
  const int d = phi.grid().dim;
  const auto g = spectral_gradient(phi);  // comps d*d, (k,l) at k*d+l
  Eigen::MatrixXd b(g.num_nodes(), d * d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      b.col(k * d + l) = g.values().col(k * d + l) - g.values().col(l * d + k);
  return PeriodicField(phi.grid(), std::move(b));
}

PeriodicField project_tensor_columns(const PeriodicField& tensor) {
  // apply the Leray projection to the d-vector (entry (., i)) for each i
  const PeriodicGrid& g = tensor.grid();
  const int d = g.dim;
  Eigen::MatrixXd out(tensor.num_nodes(), d * d);
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXd col(tensor.num_nodes(), d);
    for (int j = 0; j < d; ++j) col.col(j) = tensor.values().col(j * d + i);
    const auto proj = leray_project(PeriodicField(g, std::move(col)));
    for (int j = 0; j < d; ++j) out.col(j * d + i) = proj.values().col(j);
  }
  return PeriodicField(g, std::move(out));
}

WPairEstimate transport_estimates(const PideProblem& prob, double t, int M, bool project,
                                  bool want_w, bool want_grad, const FkOptions& opt) {
  prob.validate();
  if (M < 1) throw std::invalid_argument("transport estimate: need at least one sample");
  const PeriodicGrid& g = prob.u.grid();
  const int d = g.dim;
  if (prob.phi.comps() != d)
    throw std::invalid_argument("transport estimate: phi must have d components");

  std::optional<PeriodicField> b;
  if (want_grad) b = antisym_gradient(prob.phi);

  WPairEstimate out{{PeriodicField::zero(g, d), PeriodicField::zero(g, d)},
                    {PeriodicField::zero(g, d * d), PeriodicField::zero(g, d * d)}};

  if (t == 0.0) {
    if (want_w) {
      out.w.mean = project ? leray_project(prob.phi) : prob.phi;
    }
    if (want_grad) {
      out.grad_w.mean = project_tensor_columns(*b);
    }
    return out;
  }

  const FlowConfig cfg = flow_config_for(prob, opt);
  NodeEnsembleOptions nopt;
  nopt.samples_per_node = M;
  nopt.stream = opt.stream;
  nopt.want_transport = want_w;
  nopt.grad_phi_antisym = want_grad ? &*b : nullptr;
  const auto res = node_ensemble(prob.u, prob.phi, t, cfg, nopt);

  if (want_w) {
    PeriodicField mean(g, res.transport_mean);
    out.w.mean = project ? leray_project(mean) : mean;
    out.w.stderr_ = PeriodicField(g, res.transport_se);
  }
  if (want_grad) {
    out.grad_w.mean = project_tensor_columns(PeriodicField(g, res.grad_mean));
    out.grad_w.stderr_ = PeriodicField(g, res.grad_se);
  }
  return out;
}

}  // namespace

FieldEstimate estimate_w(const PideProblem& prob, double t, int M, bool project,
                         const FkOptions& opt) {
  return transport_estimates(prob, t, M, project, true, false, opt).w;
}

FieldEstimate estimate_grad_w(const PideProblem& prob, double t, int M, const FkOptions& opt) {
  return transport_estimates(prob, t, M, false, false, true, opt).grad_w;
}

WPairEstimate estimate_w_pair(const PideProblem& prob, double t, int M, bool project,
                              const FkOptions& opt) {
  return transport_estimates(prob, t, M, project, true, true, opt);
}

MildSolution mild_solve(const PideProblem& prob, double horizon, int time_steps) {
  prob.validate();
  if (!(horizon < 0.0)) throw std::invalid_argument("mild_solve: horizon must be negative");
  if (time_steps < 1) throw std::invalid_argument("mild_solve: need at least one time step");
  const PeriodicGrid& g = prob.u.grid();
  const int comps = prob.phi.comps();
  const int K = time_steps;
  const double dt = -horizon / K;

  MildSolution sol;
  sol.times.resize(std::size_t(K) + 1);
  for (int i = 0; i <= K; ++i) sol.times[std::size_t(i)] = -dt * i;

  // everything lives in coefficient space; one physical round trip per slice
  // per iteration builds the transport term
  std::vector<Eigen::MatrixXcd> h_hat(std::size_t(K) + 1, prob.phi.coeffs());
  std::vector<Eigen::MatrixXcd> free_part(std::size_t(K) + 1);
  std::vector<Eigen::VectorXd> psi_pow(std::size_t(K) + 1);  // e^{-i dt psi} per mode

  Eigen::VectorXd psi(g.num_nodes());
  {
    const double nu_scale = std::pow(prob.viscosity, 1.0 / prob.symbol.alpha);
    std::map<double, double> cache;
    for (Eigen::Index m = 0; m < g.num_nodes(); ++m) {
      const auto idx = g.unflatten(m);
      double k2 = 0.0;
      for (int a = 0; a < g.dim; ++a) {
        const double kk = g.wavenumber(idx[std::size_t(a)]);
        k2 += kk * kk;
      }
      auto it = cache.find(k2);
      if (it == cache.end())
        it = cache.emplace(k2, symbol_eval_radial(prob.symbol, nu_scale * std::sqrt(k2), g.dim))
                 .first;
      psi[m] = it->second;
    }
  }
  for (int i = 0; i <= K; ++i) {
    const Eigen::ArrayXd decay = (-dt * i * psi.array()).exp();
    free_part[std::size_t(i)] =
        prob.phi.coeffs().array().colwise() * decay.cast<std::complex<double>>();
    psi_pow[std::size_t(i)] = decay.matrix();
  }

  const auto transport_hat = [&](int j, const Eigen::MatrixXcd& hj) {
    // (u.grad) h + c h at slice j, pseudo-spectral, returned in coeff space
    const PeriodicField h(g, dft_inverse(g, hj).real());
    const auto grad = spectral_gradient(h);  // comps*d
    const Eigen::MatrixXd uvals = prob.u.values_at(sol.times[std::size_t(j)]);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.num_nodes(), comps);
    for (int c = 0; c < comps; ++c) {
      for (int a = 0; a < g.dim; ++a)
        out.col(c) += uvals.col(a).cwiseProduct(grad.values().col(c * g.dim + a));
    }
    if (prob.potential.has_value()) {
      const Eigen::MatrixXd cvals = prob.potential->values_at(sol.times[std::size_t(j)]);
      for (int c = 0; c < comps; ++c) out.col(c) += cvals.col(0).cwiseProduct(h.values().col(c));
    }
    return dft_forward(g, out);
  };

  double prev_diff = std::numeric_limits<double>::infinity();
  int growth_streak = 0;
  for (int it = 1; it <= 200; ++it) {
    // integrand at every slice under the current iterate
    std::vector<Eigen::MatrixXcd> g_hat(std::size_t(K) + 1);
    for (int j = 0; j <= K; ++j) g_hat[std::size_t(j)] = transport_hat(j, h_hat[std::size_t(j)]);

    double diff = 0.0;
    for (int i = 1; i <= K; ++i) {
      Eigen::MatrixXcd acc = free_part[std::size_t(i)];
      for (int j = 0; j <= i; ++j) {
        const double w = (j == 0 || j == i) ? 0.5 * dt : dt;
        // T_{t_i - t_j} has multiplier e^{-(i-j) dt psi}
        acc += w * (g_hat[std::size_t(j)].array().colwise() *
                    psi_pow[std::size_t(i - j)].array().cast<std::complex<double>>())
                       .matrix();
      }
      const Eigen::MatrixXcd delta = acc - h_hat[std::size_t(i)];
      diff = std::max(diff, dft_inverse(g, delta).real().cwiseAbs().maxCoeff());
      h_hat[std::size_t(i)] = std::move(acc);
    }

    sol.iterations = it;
    sol.final_diff = diff;
    if (diff <= 1e-10) {
      sol.converged = true;
      break;
    }
    if (diff > prev_diff && std::isfinite(prev_diff)) {
      if (++growth_streak >= 2) throw HorizonTooLongError(diff / prev_diff);
    } else {
      growth_streak = 0;
    }
    if (!std::isfinite(diff)) throw HorizonTooLongError(std::numeric_limits<double>::infinity());
    prev_diff = diff;
  }

  sol.slices.reserve(std::size_t(K) + 1);
  for (int i = 0; i <= K; ++i)
    sol.slices.push_back(PeriodicField::from_coeffs(g, h_hat[std::size_t(i)]));
  return sol;
}

std::vector<ResidualReport> pide_residual(const std::vector<double>& times,
                                          const std::vector<PeriodicField>& h,
                                          const PideProblem& prob) {
  if (times.size() < 3 || times.size() != h.size())
    throw std::invalid_argument("pide_residual: need at least three matching slices");
  prob.validate();
  const PeriodicGrid& g = h.front().grid();
  const int comps = h.front().comps();
  std::vector<ResidualReport> out;
  for (std::size_t i = 1; i + 1 < times.size(); ++i) {
    const double dt2 = times[i - 1] - times[i + 1];
    Eigen::MatrixXd res = (h[i - 1].values() - h[i + 1].values()) / dt2;  // d_t h
    const auto lh = generator_apply(h[i], prob.symbol, prob.viscosity);
    const auto grad = spectral_gradient(h[i]);
    const Eigen::MatrixXd uvals = prob.u.values_at(times[i]);
    for (int c = 0; c < comps; ++c) {
      res.col(c) += lh.values().col(c);
      for (int a = 0; a < g.dim; ++a)
        res.col(c) += uvals.col(a).cwiseProduct(grad.values().col(c * g.dim + a));
      if (prob.potential.has_value())
        res.col(c) += prob.potential->values_at(times[i]).col(0).cwiseProduct(h[i].values().col(c));
    }
    const PeriodicField rf(g, std::move(res));
    out.push_back({times[i], lp_norm(rf, 2.0), rf.max_abs()});
  }
  return out;
}

}  // namespace fnse

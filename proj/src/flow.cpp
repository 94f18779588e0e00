#include "fnse/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fnse/parallel.hpp"
#include "fnse/rng.hpp"

namespace fnse {

void FlowConfig::validate(int dim) const {
  if (!(dt > 0.0)) throw std::invalid_argument("FlowConfig: dt must be positive");
  if (!(viscosity >= 1.0)) throw std::invalid_argument("FlowConfig: viscosity must be >= 1");
  sampler.validate();
  if (sampler.dim != dim) throw std::invalid_argument("FlowConfig: sampler dimension mismatch");
}

double matrix_opnorm(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  const int d = int(m.rows());
  if (d == 1) return std::abs(m(0, 0));
  if (d == 2) {
    const double f = m.squaredNorm();
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double disc = std::sqrt(std::max(0.0, f * f - 4.0 * det * det));
    return std::sqrt(0.5 * (f + disc));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
  es.computeDirect(Eigen::Matrix3d(m.transpose() * m), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

namespace {

inline double opnorm_small(const double* g, int d) {
  if (d == 1) return std::abs(g[0]);
  if (d == 2) {
    const double f = g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3];
    const double det = g[0] * g[3] - g[1] * g[2];
    const double disc = std::sqrt(std::max(0.0, f * f - 4.0 * det * det));
    return std::sqrt(0.5 * (f + disc));
  }
  Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> m(g);
  return matrix_opnorm(Eigen::MatrixXd(m));
}

// Validates that dt divides every slice interval and t sits on the ladder.
int step_count(const FieldHistory& u, double t, double dt) {
  for (int i = 0; i + 1 < u.num_slices(); ++i) {
    const double len = u.time(i) - u.time(i + 1);
    const double k = len / dt;
    if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k))
      throw std::invalid_argument("flow: dt must divide every slice interval");
  }
  const double k = -t / dt;
  if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k))
    throw std::invalid_argument("flow: start time must sit on the step ladder");
  return int(std::round(k));
}

// Per-step drift access plan: blended slice pair and global ladder id.
struct StepPlan {
  const double* u_lo = nullptr;   // slice values, column-major (nodes x comps)
  const double* u_hi = nullptr;
  const double* g_lo = nullptr;   // gradient slice values
  const double* g_hi = nullptr;
  double theta = 0.0;
  std::uint32_t ladder_id = 0;
};

std::vector<StepPlan> build_plan(const FieldHistory& u, double t, double dt, int nsteps) {
  std::vector<StepPlan> plan(static_cast<std::size_t>(nsteps));
  int idx = 0;
  double theta = 0.0;
  for (int m = 0; m < nsteps; ++m) {
    const double s = t + m * dt;
    u.locate(std::min(0.0, s), idx, theta);
    auto& p = plan[std::size_t(m)];
    p.u_lo = u.slice(idx).values().data();
    p.u_hi = u.slice(idx + 1).values().data();
    p.g_lo = u.gradient_slice(idx).values().data();
    p.g_hi = u.gradient_slice(idx + 1).values().data();
    p.theta = theta;
    p.ladder_id = std::uint32_t(std::lround(-s / dt));
  }
  return plan;
}

template <int D>
struct Corners {
  Eigen::Index flat[1 << D];
  double w[1 << D];
};

template <int D>
inline void make_corners(const double* x, int n, double inv_h, Corners<D>& c) {
  const int mask = n - 1;  // n is a power of two
  int lo[D], hi[D];
  double wf[D];
  for (int a = 0; a < D; ++a) {
    const double u = x[a] * inv_h;
    double fl = std::floor(u);
    wf[a] = u - fl;
    lo[a] = int(fl) & mask;
    hi[a] = (lo[a] + 1) & mask;
  }
  for (int s = 0; s < (1 << D); ++s) {
    Eigen::Index flat = 0;
    double w = 1.0;
    for (int a = 0; a < D; ++a) {
      const bool up = (s >> (D - 1 - a)) & 1;  // axis a is slower than a+1
      flat = flat * n + (up ? hi[a] : lo[a]);
      w *= up ? wf[a] : 1.0 - wf[a];
    }
    c.flat[s] = flat;
    c.w[s] = w;
  }
}

// Bilinear fetch of `comps` components from the blended pair (lo, hi).
template <int D>
inline void fetch_blend(const StepPlan& p, const Corners<D>& c, Eigen::Index nodes,
                        const double* lo, const double* hi, int comps, double* out) {
  for (int cc = 0; cc < comps; ++cc) {
    const double* colA = lo + cc * nodes;
    const double* colB = hi + cc * nodes;
    double a = 0.0, b = 0.0;
    for (int s = 0; s < (1 << D); ++s) {
      a += c.w[s] * colA[c.flat[s]];
      b += c.w[s] * colB[c.flat[s]];
    }
    out[cc] = (1.0 - p.theta) * a + p.theta * b;
  }
}

struct ParticleState {
  double x[3] = {0, 0, 0};
  double jac[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  double grad_int = 0.0;
  double pot_int = 0.0;
};

template <int D>
inline void init_particle(const double* x0, ParticleState& ps) {
  for (int a = 0; a < D; ++a) ps.x[a] = wrap_twopi(x0[a]);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) ps.jac[i * D + j] = i == j ? 1.0 : 0.0;
  ps.grad_int = 0.0;
  ps.pot_int = 0.0;
}

// One Euler step under the planned drift; noise added by the caller.
template <int D>
inline void drift_step(const StepPlan& p, const PeriodicGrid& grid, double dt,
                       ParticleState& ps) {
  Corners<D> c;
  make_corners<D>(ps.x, grid.n, 1.0 / grid.spacing(), c);
  const Eigen::Index nodes = grid.num_nodes();
  double u[D], g[D * D];
  fetch_blend<D>(p, c, nodes, p.u_lo, p.u_hi, D, u);
  fetch_blend<D>(p, c, nodes, p.g_lo, p.g_hi, D * D, g);

  double jnew[D * D];
  for (int i = 0; i < D; ++i) {
    for (int j = 0; j < D; ++j) {
      double acc = 0.0;
      for (int k = 0; k < D; ++k) acc += g[i * D + k] * ps.jac[k * D + j];
      jnew[i * D + j] = ps.jac[i * D + j] + dt * acc;
    }
  }
  for (int i = 0; i < D * D; ++i) ps.jac[i] = jnew[i];
  ps.grad_int += dt * opnorm_small(g, D);
  for (int a = 0; a < D; ++a) ps.x[a] = wrap_twopi(ps.x[a] + dt * u[a]);
}

// Spectral-interpolation variant (slow path, oracle-accuracy runs).
void drift_step_spectral(const FieldHistory& u, double s, const PeriodicGrid& grid, double dt,
                         int d, ParticleState& ps) {
  int idx;
  double theta;
  u.locate(std::min(0.0, s), idx, theta);
  Eigen::VectorXd x(d);
  for (int a = 0; a < d; ++a) x[a] = ps.x[a];
  const Eigen::VectorXd u0 = interpolate(u.slice(idx), x, InterpMode::spectral);
  const Eigen::VectorXd u1 = interpolate(u.slice(idx + 1), x, InterpMode::spectral);
  const Eigen::VectorXd g0 = interpolate(u.gradient_slice(idx), x, InterpMode::spectral);
  const Eigen::VectorXd g1 = interpolate(u.gradient_slice(idx + 1), x, InterpMode::spectral);
  const Eigen::VectorXd uu = (1.0 - theta) * u0 + theta * u1;
  const Eigen::VectorXd gg = (1.0 - theta) * g0 + theta * g1;

  double jnew[9];
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += gg[i * d + k] * ps.jac[k * d + j];
      jnew[i * d + j] = ps.jac[i * d + j] + dt * acc;
    }
  }
  for (int i = 0; i < d * d; ++i) ps.jac[i] = jnew[i];
  ps.grad_int += dt * opnorm_small(gg.data(), d);
  for (int a = 0; a < d; ++a) ps.x[a] = wrap_twopi(ps.x[a] + dt * uu[a]);
}

FlowSample finish_sample(const ParticleState& ps, int d) {
  FlowSample out;
  out.position = Eigen::VectorXd(d);
  for (int a = 0; a < d; ++a) out.position[a] = ps.x[a];
  out.jacobian = Eigen::MatrixXd(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out.jacobian(i, j) = ps.jac[i * d + j];
  out.grad_drift_integral = ps.grad_int;
  out.potential_integral = ps.pot_int;
  out.has_integrals = true;
  return out;
}

}  // namespace

FlowSample integrate_flow(const Eigen::VectorXd& x0, double t, const VelocityHistory& u,
                          const FlowConfig& cfg, std::uint64_t sample_key,
                          const FieldHistory* potential, double t_end) {
  const PeriodicGrid& grid = u.grid();
  const int d = grid.dim;
  cfg.validate(d);
  if (x0.size() != d) throw std::invalid_argument("integrate_flow: wrong start dimension");
  if (!(t < 0.0) || t < u.horizon() - 1e-12)
    throw std::invalid_argument("integrate_flow: start time must lie in [T, 0)");
  if (t_end > 0.0 || t_end < t)
    throw std::invalid_argument("integrate_flow: end time must lie in [t, 0]");
  int nsteps = step_count(u, t, cfg.dt);
  if (t_end < 0.0) nsteps -= step_count(u, t_end, cfg.dt);
  const auto plan = build_plan(u, t, cfg.dt, nsteps);
  const double nu_scale = std::pow(cfg.viscosity, 1.0 / cfg.sampler.symbol.alpha);

  ParticleState ps;
  double x0a[3] = {0, 0, 0};
  for (int a = 0; a < d; ++a) x0a[a] = wrap_twopi(x0[a]);
  for (int a = 0; a < d; ++a) ps.x[a] = x0a[a];
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) ps.jac[i * d + j] = i == j ? 1.0 : 0.0;

  double incr[3];
  for (int m = 0; m < nsteps; ++m) {
    const double s = t + m * cfg.dt;
    if (potential != nullptr) {
      Eigen::VectorXd x(d);
      for (int a = 0; a < d; ++a) x[a] = ps.x[a];
      int idx;
      double theta;
      potential->locate(std::min(0.0, s), idx, theta);
      const double c0 = interpolate(potential->slice(idx), x, cfg.interpolation)[0];
      const double c1 = interpolate(potential->slice(idx + 1), x, cfg.interpolation)[0];
      ps.pot_int += cfg.dt * ((1.0 - theta) * c0 + theta * c1);
    }
    if (cfg.interpolation == InterpMode::linear) {
      const auto& p = plan[std::size_t(m)];
      switch (d) {
        case 1: drift_step<1>(p, grid, cfg.dt, ps); break;
        case 2: drift_step<2>(p, grid, cfg.dt, ps); break;
        default: drift_step<3>(p, grid, cfg.dt, ps); break;
      }
    } else {
      drift_step_spectral(u, s, grid, cfg.dt, d, ps);
    }
    if (cfg.noise) {
      sample_increment(cfg.sampler, cfg.dt, sample_key, plan[std::size_t(m)].ladder_id, incr);
      for (int a = 0; a < d; ++a) ps.x[a] = wrap_twopi(ps.x[a] + nu_scale * incr[a]);
    }
  }
  return finish_sample(ps, d);
}

FlowSample integrate_flow_fn(
    const Eigen::VectorXd& x0, double t,
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& drift,
    const std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)>& drift_grad,
    const FlowConfig& cfg, std::uint64_t sample_key) {
  if (!(t < 0.0)) throw std::invalid_argument("integrate_flow_fn: start time must be negative");
  const int d = int(x0.size());
  const int nsteps = int(std::round(-t / cfg.dt));
  const double nu_scale = std::pow(cfg.viscosity, 1.0 / cfg.sampler.symbol.alpha);

  Eigen::VectorXd x = x0;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(d, d);
  double grad_int = 0.0;
  double incr[3];
  for (int m = 0; m < nsteps; ++m) {
    const double s = t + m * cfg.dt;
    const Eigen::MatrixXd g = drift_grad(s, x);
    jac = (Eigen::MatrixXd::Identity(d, d) + cfg.dt * g) * jac;
    grad_int += cfg.dt * matrix_opnorm(g);
    x += cfg.dt * drift(s, x);
    if (cfg.noise) {
      sample_increment(cfg.sampler, cfg.dt, sample_key,
                       std::uint32_t(std::lround(-s / cfg.dt)), incr);
      for (int a = 0; a < d; ++a) x[a] += nu_scale * incr[a];
    }
  }
  FlowSample out;
  out.position = x;
  out.jacobian = jac;
  out.grad_drift_integral = grad_int;
  out.has_integrals = true;
  return out;
}

std::vector<FlowSample> flow_ensemble(const Eigen::VectorXd& x0, double t,
                                      const VelocityHistory& u, const FlowConfig& cfg, int M,
                                      std::uint64_t base_key, EnsembleSummary* summary) {
  if (M < 1) throw std::invalid_argument("flow_ensemble: need at least one sample");
  std::vector<FlowSample> samples(static_cast<std::size_t>(M));
  parallel_for(std::size_t(M), [&](std::size_t i) {
    samples[i] = integrate_flow(x0, t, u, cfg, base_key + i);
  });
  if (summary != nullptr) {
    const int d = int(x0.size());
    std::vector<RunningStat> pos(static_cast<std::size_t>(d)), jac(static_cast<std::size_t>(d * d));
    RunningStat det, fourth;
    for (const auto& s : samples) {
      for (int a = 0; a < d; ++a) pos[std::size_t(a)].add(s.position[a]);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) jac[std::size_t(i * d + j)].add(s.jacobian(i, j));
      det.add(s.jacobian.determinant());
      fourth.add(std::pow(matrix_opnorm(s.jacobian), 4.0));
    }
    summary->mean_position.resize(d);
    summary->se_position.resize(d);
    summary->mean_jacobian.resize(d, d);
    summary->se_jacobian.resize(d, d);
    for (int a = 0; a < d; ++a) {
      summary->mean_position[a] = pos[std::size_t(a)].mean();
      summary->se_position[a] = pos[std::size_t(a)].stderr_();
    }
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        summary->mean_jacobian(i, j) = jac[std::size_t(i * d + j)].mean();
        summary->se_jacobian(i, j) = jac[std::size_t(i * d + j)].stderr_();
      }
    }
    summary->det_jacobian = det.estimate();
    summary->jacobian_fourth_moment = fourth.estimate();
    summary->samples = std::size_t(M);
  }
  return samples;
}

ExpMomentReport exp_moment_diagnostic(std::span<const FlowSample> samples, double gamma) {
  if (samples.empty()) throw std::invalid_argument("exp_moment_diagnostic: no samples");
  if (!(gamma >= 0.0)) throw std::invalid_argument("exp_moment_diagnostic: gamma must be >= 0");
  RunningStat stat;
  for (const auto& s : samples) {
    if (!s.has_integrals)
      throw std::invalid_argument("exp_moment_diagnostic: samples lack path integrals");
    stat.add(std::exp(gamma * s.grad_drift_integral));
  }
  ExpMomentReport rep;
  rep.estimate = stat.estimate();
  rep.exceeds_threshold = rep.estimate.mean > 2.0;
  return rep;
}

namespace {

// Welford merge used for the pooled exponential-moment estimate.
void merge_stats(double& n, double& mean, double& m2, double nb, double mb, double m2b) {
  if (nb == 0.0) return;
  const double delta = mb - mean;
  const double nn = n + nb;
  mean += delta * nb / nn;
  m2 += m2b + delta * delta * n * nb / nn;
  n = nn;
}

template <int D>
void node_ensemble_impl(const VelocityHistory& u, const PeriodicField& phi, double t,
                        const FlowConfig& cfg, const NodeEnsembleOptions& opt,
                        NodeEnsembleResult& out) {
  const PeriodicGrid& grid = u.grid();
  const Eigen::Index nn = grid.num_nodes();
  const int M = opt.samples_per_node;
  const int nsteps = step_count(u, t, cfg.dt);
  const auto plan = build_plan(u, t, cfg.dt, nsteps);
  const double nu_scale = std::pow(cfg.viscosity, 1.0 / cfg.sampler.symbol.alpha);
  const int pcomps = phi.comps();

  const bool want_grad = opt.grad_phi_antisym != nullptr;
  if (opt.want_transport && pcomps != D)
    throw std::invalid_argument("node_ensemble: transport needs a d-component terminal field");
  if (want_grad && opt.grad_phi_antisym->comps() != D * D)
    throw std::invalid_argument("node_ensemble: antisymmetric gradient field must have d*d comps");

  if (opt.want_transport) {
    out.transport_mean.setZero(nn, D);
    out.transport_se.setZero(nn, D);
  }
  if (want_grad) {
    out.grad_mean.setZero(nn, D * D);
    out.grad_se.setZero(nn, D * D);
  }
  if (opt.want_plain) {
    out.plain_mean.setZero(nn, pcomps);
    out.plain_se.setZero(nn, pcomps);
  }

  const bool batched = cfg.noise && cfg.sampler.scheme == SamplingScheme::exact_stable;

  // shared increments (one stream per sample) for smooth-map estimators
  std::vector<double> shared_incr;
  if (opt.crn_across_nodes && cfg.noise) {
    const std::size_t total = std::size_t(nsteps) * std::size_t(M) * D;
    if (total > (std::size_t(1) << 28))
      throw std::invalid_argument("node_ensemble: shared-increment table too large");
    shared_incr.resize(total);
    IncrementSampler sampler = cfg.sampler;
    sampler.rng_stream = opt.stream;
    std::vector<std::uint64_t> sample_keys(static_cast<std::size_t>(M));
    for (int s = 0; s < M; ++s) sample_keys[std::size_t(s)] = std::uint64_t(s);
    parallel_for(std::size_t(nsteps), [&](std::size_t m) {
      double* row = &shared_incr[m * std::size_t(M) * D];
      if (batched) {
        sample_increments_batch(sampler, cfg.dt, sample_keys, plan[m].ladder_id, row);
      } else {
        for (int s = 0; s < M; ++s)
          sample_increment(sampler, cfg.dt, std::uint64_t(s), plan[m].ladder_id,
                           row + std::size_t(s) * D);
      }
    });
  }

  std::vector<double> node_exp_mean(std::size_t(nn), 0.0), node_exp_m2(std::size_t(nn), 0.0);

  const int block_nodes = std::max(1, int(8192 / std::max(1, M)));
  const std::size_t nblocks = std::size_t((nn + block_nodes - 1) / block_nodes);

  IncrementSampler sampler = cfg.sampler;
  sampler.rng_stream = opt.stream;

  parallel_for(nblocks, [&](std::size_t b) {
    const Eigen::Index node_lo = Eigen::Index(b) * block_nodes;
    const Eigen::Index node_hi = std::min(nn, node_lo + block_nodes);
    const int bn = int(node_hi - node_lo);
    const std::size_t np = std::size_t(bn) * std::size_t(M);
    std::vector<ParticleState> ps(np);

    std::vector<std::uint64_t> keys;
    std::vector<double> incr_buf;
    if (cfg.noise && !opt.crn_across_nodes) {
      keys.resize(np);
      for (int ni = 0; ni < bn; ++ni)
        for (int s = 0; s < M; ++s)
          keys[std::size_t(ni) * M + s] =
              (std::uint64_t(node_lo + ni) << 32) | std::uint64_t(std::uint32_t(s));
      if (batched) incr_buf.resize(np * D);
    }

    for (int ni = 0; ni < bn; ++ni) {
      const Eigen::VectorXd x0 = grid.node(node_lo + ni);
      double x0a[3] = {0, 0, 0};
      for (int a = 0; a < D; ++a) x0a[a] = x0[a];
      for (int s = 0; s < M; ++s) init_particle<D>(x0a, ps[std::size_t(ni) * M + s]);
    }

    double incr[3];
    for (int m = 0; m < nsteps; ++m) {
      const auto& p = plan[std::size_t(m)];
      const bool use_buf = cfg.noise && !opt.crn_across_nodes && batched;
      if (use_buf) sample_increments_batch(sampler, cfg.dt, keys, p.ladder_id, incr_buf.data());
      for (std::size_t pi = 0; pi < np; ++pi) {
        ParticleState& st = ps[pi];
        if (cfg.interpolation == InterpMode::linear) {
          drift_step<D>(p, grid, cfg.dt, st);
        } else {
          drift_step_spectral(u, t + m * cfg.dt, grid, cfg.dt, D, st);
        }
        if (cfg.noise) {
          const double* dl;
          if (opt.crn_across_nodes) {
            dl = &shared_incr[(std::size_t(m) * std::size_t(M) + pi % std::size_t(M)) * D];
          } else if (use_buf) {
            dl = &incr_buf[pi * D];
          } else {
            sample_increment(sampler, cfg.dt, keys[pi], p.ladder_id, incr);
            dl = incr;
          }
          for (int a = 0; a < D; ++a) st.x[a] = wrap_twopi(st.x[a] + nu_scale * dl[a]);
        }
      }
    }

    // per-node reductions, sample order fixed
    std::vector<RunningStat> tr(static_cast<std::size_t>(opt.want_transport ? D : 0));
    std::vector<RunningStat> gr(static_cast<std::size_t>(want_grad ? D * D : 0));
    std::vector<RunningStat> pl(static_cast<std::size_t>(opt.want_plain ? pcomps : 0));
    for (int ni = 0; ni < bn; ++ni) {
      const Eigen::Index node = node_lo + ni;
      for (auto& st : tr) st = RunningStat();
      for (auto& st : gr) st = RunningStat();
      for (auto& st : pl) st = RunningStat();
      RunningStat em;
      for (int s = 0; s < M; ++s) {
        const ParticleState& st = ps[std::size_t(ni) * M + s];
        Eigen::VectorXd x(D);
        for (int a = 0; a < D; ++a) x[a] = st.x[a];
        Eigen::VectorXd phix;
        if (opt.want_transport || opt.want_plain)
          phix = interpolate(phi, x, cfg.interpolation);
        if (opt.want_transport) {
          for (int i = 0; i < D; ++i) {
            double acc = 0.0;
            for (int j = 0; j < D; ++j) acc += st.jac[j * D + i] * phix[j];  // (J^T phi)_i
            tr[std::size_t(i)].add(acc);
          }
        }
        if (want_grad) {
          const Eigen::VectorXd bx =
              interpolate(*opt.grad_phi_antisym, x, cfg.interpolation);
          // G = J^T B J; entry (j,i) = sum_{k,l} J_{kj} B_{kl} J_{li}
          double bj[D * D];
          for (int k = 0; k < D; ++k)
            for (int i = 0; i < D; ++i) {
              double acc = 0.0;
              for (int l = 0; l < D; ++l) acc += bx[k * D + l] * st.jac[l * D + i];
              bj[k * D + i] = acc;
            }
          for (int j = 0; j < D; ++j)
            for (int i = 0; i < D; ++i) {
              double acc = 0.0;
              for (int k = 0; k < D; ++k) acc += st.jac[k * D + j] * bj[k * D + i];
              gr[std::size_t(j * D + i)].add(acc);
            }
        }
        if (opt.want_plain)
          for (int c = 0; c < pcomps; ++c) pl[std::size_t(c)].add(phix[c]);
        if (opt.exp_moment_gamma > 0.0) em.add(std::exp(opt.exp_moment_gamma * st.grad_int));
      }
      if (opt.want_transport)
        for (int i = 0; i < D; ++i) {
          out.transport_mean(node, i) = tr[std::size_t(i)].mean();
          out.transport_se(node, i) = tr[std::size_t(i)].stderr_();
        }
      if (want_grad)
        for (int c = 0; c < D * D; ++c) {
          out.grad_mean(node, c) = gr[std::size_t(c)].mean();
          out.grad_se(node, c) = gr[std::size_t(c)].stderr_();
        }
      if (opt.want_plain)
        for (int c = 0; c < pcomps; ++c) {
          out.plain_mean(node, c) = pl[std::size_t(c)].mean();
          out.plain_se(node, c) = pl[std::size_t(c)].stderr_();
        }
      if (opt.exp_moment_gamma > 0.0) {
        node_exp_mean[std::size_t(node)] = em.mean();
        node_exp_m2[std::size_t(node)] = em.variance() * double(std::max<std::size_t>(
                                             1, em.count() - 1));
      }
    }
  });

  if (opt.exp_moment_gamma > 0.0) {
    out.exp_moment_max = *std::max_element(node_exp_mean.begin(), node_exp_mean.end());
    double n = 0.0, mean = 0.0, m2 = 0.0;
    for (Eigen::Index i = 0; i < nn; ++i)
      merge_stats(n, mean, m2, double(M), node_exp_mean[std::size_t(i)],
                  node_exp_m2[std::size_t(i)]);
    out.exp_moment_pooled.mean = mean;
    out.exp_moment_pooled.n = std::size_t(n);
    out.exp_moment_pooled.stderr_ = n > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
  }
}

}  // namespace

NodeEnsembleResult node_ensemble(const VelocityHistory& u, const PeriodicField& phi, double t,
                                 const FlowConfig& cfg, const NodeEnsembleOptions& options) {
  const int d = u.grid().dim;
  cfg.validate(d);
  if (options.samples_per_node < 1)
    throw std::invalid_argument("node_ensemble: need at least one sample per node");
  if (phi.grid() != u.grid())
    throw std::invalid_argument("node_ensemble: terminal field grid mismatch");
  if (!(t < 0.0) || t < u.horizon() - 1e-12)
    throw std::invalid_argument("node_ensemble: start time must lie in [T, 0)");
  NodeEnsembleResult out;
  switch (d) {
    case 1: node_ensemble_impl<1>(u, phi, t, cfg, options, out); break;
    case 2: node_ensemble_impl<2>(u, phi, t, cfg, options, out); break;
    default: node_ensemble_impl<3>(u, phi, t, cfg, options, out); break;
  }
  return out;
}

}  // namespace fnse

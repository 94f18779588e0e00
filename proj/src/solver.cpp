#include "fnse/solver.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "fnse/spectral.hpp"

namespace fnse {

void SolveConfig::validate() const {
  grid.validate();
  symbol.validate();
  if (!(symbol.alpha > 1.0 && symbol.alpha < 2.0))
    throw std::invalid_argument("SolveConfig: the solver requires alpha in (1,2)");
  if (!(viscosity >= 1.0)) throw std::invalid_argument("SolveConfig: viscosity must be >= 1");
  if (samples_per_node < 1) throw std::invalid_argument("SolveConfig: need samples per node");
  if (!(dt > 0.0)) throw std::invalid_argument("SolveConfig: dt must be positive");
  if (time_slices < 1) throw std::invalid_argument("SolveConfig: need time slices");
  if (!(c0 > 0.0)) throw std::invalid_argument("SolveConfig: C0 must be positive");
  if (!(p > 2.0 * grid.dim / symbol.alpha)) {
    std::ostringstream os;
    os << "SolveConfig: p = " << p << " violates p > 2d/alpha = "
       << 2.0 * grid.dim / symbol.alpha;
    throw std::invalid_argument(os.str());
  }
  if (picard_max < 1 || max_halvings < 0)
    throw std::invalid_argument("SolveConfig: iteration limits must be positive");
}

double local_horizon(const PeriodicField& u0, const SolveConfig& cfg) {
  cfg.validate();
  const double grad_norm = sobolev_norm(u0, 1, cfg.p);
  if (grad_norm == 0.0) return -1.0;  // the zero field is a global fixed point
  return std::max(-1.0, -1.0 / (cfg.c0 * grad_norm));
}

namespace {

std::vector<double> slice_times(double horizon, int K) {
  std::vector<double> times(std::size_t(K) + 1);
  for (int j = 0; j <= K; ++j) times[std::size_t(j)] = horizon * j / K;
  return times;
}

// Step cap snapped so that dt divides the slice interval exactly.
double snapped_dt(double horizon, int K, double dt_cap) {
  const double slice_len = -horizon / K;
  const int steps = std::max(1, int(std::ceil(slice_len / dt_cap - 1e-12)));
  return slice_len / steps;
}

FlowConfig make_flow_config(const SolveConfig& cfg, double dt_eff) {
  FlowConfig fc;
  fc.dt = dt_eff;
  fc.viscosity = cfg.viscosity;
  fc.interpolation = cfg.interpolation;
  fc.sampler.symbol = cfg.symbol;
  fc.sampler.dim = cfg.grid.dim;
  fc.sampler.scheme = cfg.symbol.kind == SymbolKind::isotropic_stable
                          ? SamplingScheme::exact_stable
                          : SamplingScheme::compound_poisson_gaussian;
  return fc;
}

PicardStepResult picard_step_seeded(const VelocityHistory& u_n, const PeriodicField& u0,
                                    const SolveConfig& cfg, std::uint64_t leg_stream) {
  const double horizon = u_n.horizon();
  const int K = u_n.num_slices() - 1;
  const double dt_eff = snapped_dt(horizon, K, cfg.dt);
  const FlowConfig fc = make_flow_config(cfg, dt_eff);

  PicardStepResult out;
  out.times = slice_times(horizon, K);
  out.se_aggregate.assign(std::size_t(K) + 1, 0.0);
  std::vector<std::optional<PeriodicField>> computed(std::size_t(K) + 1);
  computed[0] = u0;

  // deepest slice first: the exponential moment is increasing in |t|, so a
  // horizon breach shows up there and the remaining slices can be skipped
  std::vector<int> order{K};
  for (int j = 1; j < K; ++j) order.push_back(j);

  for (int j : order) {
    NodeEnsembleOptions opt;
    opt.samples_per_node = cfg.samples_per_node;
    opt.stream = derive_stream(leg_stream, std::uint64_t(j));
    opt.want_transport = true;
    opt.exp_moment_gamma = j == K ? 4.0 : 0.0;
    const auto res = node_ensemble(u_n, u0, out.times[std::size_t(j)], fc, opt);

    if (j == K) {
      out.exp_moment_max = res.exp_moment_max;
      if (res.exp_moment_max > 2.0) {
        out.aborted_exp_moment = true;
        return out;
      }
    }
    PeriodicField raw(cfg.grid, res.transport_mean);
    PeriodicField slice = mean_subtract(leray_project(raw));
    slice.set_divergence_free(true);
    computed[std::size_t(j)] = std::move(slice);
    out.se_aggregate[std::size_t(j)] =
        lp_norm(PeriodicField(cfg.grid, res.transport_se), cfg.p);
  }
  out.slices.reserve(std::size_t(K) + 1);
  for (int j = 0; j <= K; ++j) out.slices.push_back(std::move(*computed[std::size_t(j)]));
  return out;
}

}  // namespace

PicardStepResult picard_step(const VelocityHistory& u_n, const PeriodicField& u0,
                             const SolveConfig& cfg) {
  cfg.validate();
  if (u0.grid() != cfg.grid || u0.comps() != cfg.grid.dim)
    throw std::invalid_argument("picard_step: u0 must be a velocity field on the solve grid");
  return picard_step_seeded(u_n, u0, cfg, derive_stream(cfg.seed, 0x9A1Cull));
}

namespace {

SolutionHistory assemble_solution(std::vector<double> times, std::vector<PeriodicField> slices,
                                  std::vector<double> se, std::vector<IterationRecord> recs,
                                  double horizon, int halvings, bool converged, double p) {
  SolutionHistory sol{
      VelocityHistory(std::move(times), std::move(slices), true, true),
      std::move(se), {}, {}, std::move(recs), horizon, halvings, converged};
  for (int j = 0; j < sol.u.num_slices(); ++j) {
    sol.norm_track.push_back(lp_norm(sol.u.slice(j), p));
    sol.grad_norm_track.push_back(sobolev_norm(sol.u.slice(j), 1, p));
  }
  return sol;
}

SolutionHistory solve_local_from(const PeriodicField& u0, const SolveConfig& cfg,
                                 std::uint64_t leg_stream) {
  if (max_divergence(u0) > 1e-8 * std::max(1.0, u0.max_abs()))
    throw std::invalid_argument("solve_local: u0 must be divergence-free");
  Eigen::VectorXd mean = u0.values().colwise().mean();
  if (mean.cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, u0.max_abs()))
    throw std::invalid_argument("solve_local: u0 must have zero mean");

  double horizon = local_horizon(u0, cfg);
  std::vector<IterationRecord> all_records;

  if (u0.max_abs() == 0.0) {
    // the zero field is already the fixed point; skip the particle work
    const auto times = slice_times(horizon, cfg.time_slices);
    std::vector<PeriodicField> zero(times.size(), u0);
    IterationRecord rec;
    rec.iteration = 1;
    all_records.push_back(rec);
    return assemble_solution(times, std::move(zero), std::vector<double>(times.size(), 0.0),
                             std::move(all_records), horizon, 0, true, cfg.p);
  }

  for (int halving = 0; halving <= cfg.max_halvings; ++halving) {
    const auto times = slice_times(horizon, cfg.time_slices);
    std::vector<PeriodicField> current(times.size(), u0);  // u^0: frozen initial data
    VelocityHistory u_n(times, current, true, true);

    std::vector<double> se = std::vector<double>(times.size(), 0.0);
    double prev_diff = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    bool halve = false;

    for (int it = 1; it <= cfg.picard_max; ++it) {
      auto step = picard_step_seeded(u_n, u0, cfg, leg_stream);

      IterationRecord rec;
      rec.iteration = it;
      rec.exp_moment_max = step.exp_moment_max;
      if (step.aborted_exp_moment) {
        all_records.push_back(rec);
        halve = true;  // operational form of the exponential-moment threshold
        break;
      }
      rec.slice_diffs.resize(times.size(), 0.0);
      double noise = 0.0;
      for (std::size_t j = 0; j < times.size(); ++j) {
        const PeriodicField diff(cfg.grid,
                                 step.slices[j].values() - u_n.slice(int(j)).values());
        rec.slice_diffs[j] = lp_norm(diff, cfg.p);
        rec.max_slice_diff = std::max(rec.max_slice_diff, rec.slice_diffs[j]);
        noise = std::max(noise, step.se_aggregate[j]);
      }
      rec.noise_floor = 3.0 * noise;
      all_records.push_back(rec);

      se = step.se_aggregate;
      u_n = VelocityHistory(times, step.slices, true, true);

      if (rec.max_slice_diff <= cfg.picard_tol + rec.noise_floor) {
        return assemble_solution(times, std::move(step.slices), std::move(se),
                                 std::move(all_records), horizon, halving, true, cfg.p);
      }
      if (rec.max_slice_diff > prev_diff) {
        if (++growth_streak >= 2) {
          halve = true;
          break;
        }
      } else {
        growth_streak = 0;
      }
      prev_diff = rec.max_slice_diff;
    }

    if (!halve) {
      // out of iterations while still above the floor: treat as non-contraction
      halve = true;
    }
    if (halving == cfg.max_halvings) break;
    horizon *= 0.5;
  }

  throw NoLocalSolutionError(
      "solve_local: no local solution at this resolution (horizon halvings exhausted)",
      std::move(all_records));
}

}  // namespace

SolutionHistory solve_local(const PeriodicField& u0, const SolveConfig& cfg) {
  cfg.validate();
  if (u0.grid() != cfg.grid || u0.comps() != cfg.grid.dim)
    throw std::invalid_argument("solve_local: u0 must be a velocity field on the solve grid");
  return solve_local_from(u0, cfg, derive_stream(cfg.seed, 0x9A1Cull));
}

std::vector<WeakFormReport> weak_form_residual(const SolutionHistory& sol,
                                               const SolveConfig& cfg,
                                               const std::vector<PeriodicField>& test_fields) {
  if (sol.u.num_slices() < 3)
    throw std::invalid_argument("weak_form_residual: need at least three slices");
  const PeriodicGrid& g = cfg.grid;
  const int d = g.dim;
  const int K = sol.u.num_slices() - 1;

  std::vector<WeakFormReport> reports;
  for (const auto& phi : test_fields) {
    if (max_divergence(phi) > 1e-8 * std::max(1.0, phi.max_abs()))
      throw std::invalid_argument("weak_form_residual: test field must be divergence-free");
    const auto lphi = generator_apply_dual(phi, cfg.symbol, cfg.viscosity);

    std::vector<double> integrand(std::size_t(K) + 1, 0.0);
    std::vector<double> se_integrand(std::size_t(K) + 1, 0.0);
    const double hd = std::pow(g.spacing(), d);
    for (int j = 0; j <= K; ++j) {
      const auto& u = sol.u.slice(j);
      const auto& grad = sol.u.gradient_slice(j);
      Eigen::MatrixXd adv(g.num_nodes(), d);
      for (int c = 0; c < d; ++c) {
        adv.col(c).setZero();
        for (int a = 0; a < d; ++a)
          adv.col(c) += u.values().col(a).cwiseProduct(grad.values().col(c * d + a));
      }
      integrand[std::size_t(j)] =
          inner_product(u, lphi) + inner_product(PeriodicField(g, std::move(adv)), phi);
      // first-order error propagation: the advective term is quadratic, so
      // its noise scales with 2 ||grad u||_inf on top of the linear term
      const double grad_inf = lp_norm(grad, std::numeric_limits<double>::infinity());
      const double se_node = sol.se_aggregate[std::size_t(j)] /
                             std::max(1e-300, std::pow(hd * double(g.num_nodes()), 1.0 / cfg.p));
      const double phi_l1 = hd * phi.values().array().abs().sum();
      const double lphi_l1 = hd * lphi.values().array().abs().sum();
      se_integrand[std::size_t(j)] = se_node * (lphi_l1 + 2.0 * grad_inf * phi_l1);
    }

    WeakFormReport rep;
    double acc = 0.0, se_acc = 0.0;
    for (int j = 0; j + 1 <= K; ++j) {
      const double w = sol.u.time(j) - sol.u.time(j + 1);
      acc += 0.5 * w * (integrand[std::size_t(j)] + integrand[std::size_t(j + 1)]);
      se_acc += 0.5 * w * (se_integrand[std::size_t(j)] + se_integrand[std::size_t(j + 1)]);
    }
    rep.residual = inner_product(sol.u.slice(K), phi) - inner_product(sol.u.slice(0), phi) - acc;

    // terminal-slice noise enters directly; integral noise through the weights
    const double se_node_T = sol.se_aggregate[std::size_t(K)] /
                             std::max(1e-300, std::pow(hd * double(g.num_nodes()), 1.0 / cfg.p));
    const double phi_l1 = hd * phi.values().array().abs().sum();
    rep.stderr_budget = se_node_T * phi_l1 + se_acc;

    // trapezoid curvature estimate from second divided differences
    double curv = 0.0;
    for (int j = 1; j < K; ++j) {
      const double dt1 = sol.u.time(j - 1) - sol.u.time(j);
      curv = std::max(curv, std::abs(integrand[std::size_t(j - 1)] -
                                     2.0 * integrand[std::size_t(j)] +
                                     integrand[std::size_t(j + 1)]) /
                                (dt1 * dt1));
    }
    const double slice_len = sol.u.time(0) - sol.u.time(1);
    rep.quadrature_budget = curv * slice_len * slice_len / 12.0 * (-sol.horizon);
    reports.push_back(rep);
  }
  return reports;
}

SolutionHistory continue_global(const PeriodicField& u0, const SolveConfig& cfg,
                                double total_horizon) {
  cfg.validate();
  if (!(total_horizon < 0.0))
    throw std::invalid_argument("continue_global: total horizon must be negative");

  std::vector<double> times{0.0};
  std::vector<PeriodicField> slices{u0};
  std::vector<double> se{0.0};
  std::vector<IterationRecord> records;

  PeriodicField leg_start = u0;
  double offset = 0.0;
  int failures = 0;
  int leg = 0;
  int halvings = 0;

  while (offset > total_horizon) {
    const auto sol =
        solve_local_from(leg_start, cfg, derive_stream(cfg.seed, 0xC071ull + std::uint64_t(leg)));
    halvings += sol.halvings;
    for (int j = 1; j < sol.u.num_slices(); ++j) {
      times.push_back(offset + sol.u.time(j));
      slices.push_back(sol.u.slice(j));
      se.push_back(sol.se_aggregate[std::size_t(j)]);
    }
    records.insert(records.end(), sol.iterations.begin(), sol.iterations.end());
    offset += sol.horizon;

    const double grad_in = sobolev_norm(leg_start, 1, cfg.p);
    const double grad_out = sobolev_norm(slices.back(), 1, cfg.p);
    if (grad_out <= grad_in) {
      failures = 0;
    } else if (++failures >= 3) {
      throw std::runtime_error(
          "continue_global: re-entry norm grew three times in a row; viscosity too small");
    }
    leg_start = slices.back();
    ++leg;
    if (offset <= total_horizon) break;
  }

  SolutionHistory out{VelocityHistory(std::move(times), std::move(slices), true, true),
                      std::move(se),
                      {},
                      {},
                      std::move(records),
                      offset,
                      halvings,
                      true};
  for (int j = 0; j < out.u.num_slices(); ++j) {
    out.norm_track.push_back(lp_norm(out.u.slice(j), cfg.p));
    out.grad_norm_track.push_back(sobolev_norm(out.u.slice(j), 1, cfg.p));
  }
  return out;
}

}  // namespace fnse

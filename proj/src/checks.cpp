#include "fnse/checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fnse/parallel.hpp"
#include "fnse/rng.hpp"
#include "fnse/spectral.hpp"

namespace fnse {

namespace {

struct SlopeAccumulator {
  std::vector<double> lx, ly;
  void add(double x, double y) {
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  double slope() const {
    const double n = double(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
};

struct Histogram {
  double width = 0.0;
  std::vector<long> counts;  // bin i covers (i - B) * width +- width/2
  long total = 0;
  int offset = 0;  // index of the origin bin

  double density(int bin) const {
    return double(counts[std::size_t(bin)]) / (double(total) * width);
  }
  double stderr_(int bin) const {
    return std::sqrt(double(counts[std::size_t(bin)])) / (double(total) * width);
  }
  double center(int bin) const { return (bin - offset) * width; }
};

Histogram make_histogram(std::vector<double>& samples) {
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const double q1 = samples[n / 4], q3 = samples[(3 * n) / 4];
  const double iqr = std::max(q3 - q1, 1e-12);
  Histogram h;
  h.width = 2.0 * iqr / std::cbrt(double(n));  // Freedman-Diaconis
  const double span = std::max(std::abs(samples.front()), std::abs(samples.back()));
  h.offset = int(std::floor(span / h.width)) + 1;
  h.counts.assign(std::size_t(2 * h.offset + 1), 0);
  for (double x : samples) {
    const int bin = h.offset + int(std::floor(x / h.width + 0.5));
    if (bin >= 0 && bin < int(h.counts.size())) ++h.counts[std::size_t(bin)];
  }
  h.total = long(n);
  return h;
}

std::vector<double> draw_truncated(double alpha, double sigma, int dim, double t, long m,
                                   std::uint64_t seed) {
  IncrementSampler sampler;
  sampler.symbol = LevySymbol::truncated(alpha, sigma, std::pow(-t, 1.0 / alpha));
  sampler.dim = dim;
  sampler.scheme = SamplingScheme::compound_poisson_gaussian;
  sampler.rng_stream = seed;
  std::vector<double> out(static_cast<std::size_t>(m));
  parallel_for(std::size_t(m), [&](std::size_t i) {
    double v[3];
    sample_increment(sampler, -t, std::uint64_t(i), 0, v);
    out[i] = v[0];
  });
  return out;
}

double weighted_tail_sup(const Histogram& h, double t, double alpha, int dim, bool& widened) {
  const double scale = std::pow(-t, double(dim) / alpha);
  const double inv_len = std::pow(-t, -1.0 / alpha);
  double sup = 0.0;
  widened = false;
  for (int b = 0; b < int(h.counts.size()); ++b) {
    if (h.counts[std::size_t(b)] < 20) {
      if (h.counts[std::size_t(b)] > 0) widened = true;  // thin bins skipped
      continue;
    }
    const double x = h.center(b);
    const double w = h.density(b) * scale * std::pow(1.0 + inv_len * std::abs(x), dim + 1);
    sup = std::max(sup, w);
  }
  return sup;
}

}  // namespace

KernelTailReport kernel_tail_check(double alpha, double sigma, int dim,
                                   std::span<const double> t_values, long samples,
                                   std::uint64_t seed) {
  if (dim != 1)
    throw std::invalid_argument("kernel_tail_check: histogram density estimation is 1-d");
  if (t_values.empty()) throw std::invalid_argument("kernel_tail_check: need t values");
  KernelTailReport rep;
  rep.slope_target = -double(dim) / alpha;

  SlopeAccumulator acc;
  bool symmetric = true;
  for (double t : t_values) {
    auto xs = draw_truncated(alpha, sigma, dim, t, samples, derive_stream(seed, 1));
    auto h = make_histogram(xs);
    KernelTailReport::PerT pt;
    pt.t = t;
    pt.bin_width = h.width;
    pt.density0 = h.density(h.offset);
    pt.tail_sup = weighted_tail_sup(h, t, alpha, dim, pt.widen_bins);
    acc.add(-t, pt.density0);
    for (int b = 1; b <= h.offset; ++b) {
      const int lo = h.offset - b, hi = h.offset + b;
      if (h.counts[std::size_t(lo)] < 50 && h.counts[std::size_t(hi)] < 50) continue;
      const double dev = std::abs(h.density(lo) - h.density(hi));
      if (dev > 4.0 * (h.stderr_(lo) + h.stderr_(hi))) symmetric = false;
    }
    rep.per_t.push_back(pt);
  }

  {
    const double t0 = t_values[0];
    auto xs = draw_truncated(alpha, sigma, dim, t0, 2 * samples, derive_stream(seed, 2));
    auto h = make_histogram(xs);
    bool widened = false;
    const double doubled = weighted_tail_sup(h, t0, alpha, dim, widened);
    rep.tail_doubling_change =
        std::abs(doubled - rep.per_t.front().tail_sup) / std::max(1e-300, rep.per_t.front().tail_sup);
    rep.tail_stable = std::isfinite(doubled) && rep.tail_doubling_change < 0.2;
  }

  rep.central_slope = acc.slope();
  rep.slope_pass = std::abs(rep.central_slope - rep.slope_target) <= 0.1;
  rep.symmetric = symmetric;
  rep.pass = rep.tail_stable && rep.slope_pass && rep.symmetric;
  return rep;
}

SmoothingReport semigroup_smoothing_check(const LevySymbol& symbol, const PeriodicGrid& grid,
                                          std::span<const double> viscosities,
                                          std::span<const double> t_values, double p) {
  SmoothingReport rep;
  SlopeAccumulator acc;
  std::map<long long, std::pair<double, double>> by_product;  // nu|t| -> (min, max)

  for (double nu : viscosities) {
    for (double t : t_values) {
      double best = 0.0;
      for (int k = 1; k <= grid.n / 4; k *= 2) {
        Eigen::VectorXd kv = Eigen::VectorXd::Zero(grid.dim);
        kv[0] = k;
        Eigen::VectorXd e = Eigen::VectorXd::Zero(grid.dim);
        e[grid.dim > 1 ? 1 : 0] = 1.0;
        const auto f = grid.dim > 1
                           ? single_mode(grid, kv, e, 1.0)
                           : PeriodicField::from_function(grid, 1, [k](const Eigen::VectorXd& x) {
                               return Eigen::VectorXd::Constant(1, std::cos(k * x[0]));
                             });
        const double num = sobolev_norm(semigroup_apply(f, t, symbol, nu), 1, p);
        const double den = lp_norm(f, p);
        best = std::max(best, num / den);
      }
      rep.points.push_back({nu, t, best});
      acc.add(nu * (-t), best);
      const long long key = llround(nu * (-t) * 1e9);
      auto it = by_product.find(key);
      if (it == by_product.end()) {
        by_product.emplace(key, std::make_pair(best, best));
      } else {
        it->second.first = std::min(it->second.first, best);
        it->second.second = std::max(it->second.second, best);
      }
    }
  }
  rep.slope = acc.slope();
  rep.slope_pass = std::abs(rep.slope + 1.0 / symbol.alpha) <= 0.1;
  rep.collapse_spread = 0.0;
  for (const auto& [key, mm] : by_product) {
    const double mid = 0.5 * (mm.first + mm.second);
    if (mid > 0.0)
      rep.collapse_spread = std::max(rep.collapse_spread, (mm.second - mm.first) / mid);
  }
  rep.collapse_pass = rep.collapse_spread <= 0.10;
  rep.pass = rep.slope_pass && rep.collapse_pass;
  return rep;
}

GradientCheckReport sde_gradient_check(const VelocityHistory& u, const LevySymbol& symbol,
                                       std::span<const double> viscosities,
                                       std::span<const double> t_values,
                                       const PeriodicField& phi, int samples_per_node,
                                       double dt, std::uint64_t seed) {
  GradientCheckReport rep;
  SlopeAccumulator acc;
  const int half = std::max(1, samples_per_node / 2);

  for (double nu : viscosities) {
    for (double t : t_values) {
      FlowConfig cfg;
      cfg.dt = dt;
      cfg.viscosity = nu;
      cfg.sampler.symbol = symbol;
      cfg.sampler.dim = u.grid().dim;
      cfg.sampler.scheme = symbol.kind == SymbolKind::isotropic_stable
                               ? SamplingScheme::exact_stable
                               : SamplingScheme::compound_poisson_gaussian;

      NodeEnsembleOptions opt;
      opt.samples_per_node = half;
      opt.want_transport = false;
      opt.want_plain = true;
      opt.crn_across_nodes = true;

      PeriodicField g_half[2] = {PeriodicField::zero(u.grid(), phi.comps()),
                                 PeriodicField::zero(u.grid(), phi.comps())};
      for (int r = 0; r < 2; ++r) {
        opt.stream = derive_stream(seed, 1000 + std::uint64_t(r));
        const auto res = node_ensemble(u, phi, t, cfg, opt);
        g_half[r] = PeriodicField(u.grid(), res.plain_mean);
      }
      const PeriodicField g_mean(u.grid(),
                                 0.5 * (g_half[0].values() + g_half[1].values()));
      const PeriodicField g_diff(u.grid(), g_half[0].values() - g_half[1].values());
      const double grad_sup =
          sobolev_norm(g_mean, 1, std::numeric_limits<double>::infinity());
      const double noise =
          0.5 * sobolev_norm(g_diff, 1, std::numeric_limits<double>::infinity());

      GradientCheckReport::Point pt{nu, t, grad_sup, noise, noise <= 0.1 * grad_sup};
      rep.points.push_back(pt);
      if (pt.usable) {
        acc.add(nu * (-t), grad_sup);
        ++rep.usable_points;
      }
    }
  }
  if (rep.usable_points >= 3) {
    rep.slope = acc.slope();
    rep.slope_pass = std::abs(rep.slope + 1.0 / symbol.alpha) <= 0.15;
  }
  rep.pass = rep.slope_pass && rep.usable_points >= 3;
  return rep;
}

KrylovReport krylov_check(const VelocityHistory& u, const PeriodicField& f,
                          const LevySymbol& symbol, double viscosity, double t, int samples,
                          double p, double q, double dt, std::uint64_t seed) {
  const int d = u.grid().dim;
  if (!(p > d / symbol.alpha))
    throw std::invalid_argument("krylov_check: requires p > d/alpha");
  if (!(q > p * symbol.alpha / (p * symbol.alpha - d)))
    throw std::invalid_argument("krylov_check: requires q > p alpha/(p alpha - d)");
  if (f.values().minCoeff() < 0.0)
    throw std::invalid_argument("krylov_check: test function must be nonnegative");

  FlowConfig cfg;
  cfg.dt = dt;
  cfg.viscosity = viscosity;
  cfg.sampler.symbol = symbol;
  cfg.sampler.dim = d;
  cfg.sampler.scheme = symbol.kind == SymbolKind::isotropic_stable
                           ? SamplingScheme::exact_stable
                           : SamplingScheme::compound_poisson_gaussian;
  cfg.sampler.rng_stream = seed;
  const FieldHistory fh = FieldHistory::frozen(f, std::min(t, -1.0), false, false);

  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(d, M_PI);
  auto run = [&](int m, std::uint64_t base) {
    RunningStat st;
    std::vector<double> vals(static_cast<std::size_t>(m));
    parallel_for(std::size_t(m), [&](std::size_t i) {
      vals[i] = integrate_flow(x0, t, u, cfg, base + i, &fh).potential_integral;
    });
    for (double v : vals) st.add(v);
    return st.estimate();
  };

  KrylovReport rep;
  rep.path_integral = run(samples, 0);
  rep.norm_qp = std::pow(-t, 1.0 / q) * lp_norm(f, p);
  rep.ratio = rep.path_integral.mean / std::max(1e-300, rep.norm_qp);
  const auto doubled = run(2 * samples, std::uint64_t(samples));
  rep.ratio_doubled = doubled.mean / std::max(1e-300, rep.norm_qp);
  rep.stable = std::isfinite(rep.ratio_doubled) &&
               std::abs(rep.ratio_doubled - rep.ratio) <=
                   0.25 * std::max(std::abs(rep.ratio), 1e-12);
  return rep;
}

MildGradientReport mild_gradient_bound_check(const PeriodicField& u_slice,
                                             const LevySymbol& symbol,
                                             std::span<const double> viscosities,
                                             std::span<const double> t_values, int time_steps,
                                             double p) {
  const PeriodicGrid& g = u_slice.grid();
  const int probe_modes[] = {1, 2, 3, 4, 6, 8};
  MildGradientReport rep;
  SlopeAccumulator acc;
  int usable = 0;
  for (double nu : viscosities) {
    for (double t : t_values) {
      MildGradientReport::Point pt{nu, t, 0.0, false};
      bool any = false;
      for (int k : probe_modes) {
        if (k > g.n / 4) break;
        const auto phi = PeriodicField::from_function(g, 1, [k](const Eigen::VectorXd& x) {
          return Eigen::VectorXd::Constant(1, std::cos(k * x[0]));
        });
        PideProblem prob{FieldHistory::frozen(u_slice, std::min(t, -1.0), true, true), phi,
                         symbol, nu, std::nullopt};
        try {
          const auto sol = mild_solve(prob, t, time_steps);
          if (sol.converged) {
            const double gain = sobolev_norm(sol.slices.back(), 1, p) / lp_norm(phi, p);
            pt.grad_gain = std::max(pt.grad_gain, gain);
            any = true;
          }
        } catch (const HorizonTooLongError&) {
        }
      }
      pt.usable = any;
      rep.points.push_back(pt);
      if (pt.usable) {
        acc.add(nu * (-t), pt.grad_gain);
        ++usable;
      }
    }
  }
  if (usable >= 3) {
    rep.slope = acc.slope();
    rep.slope_pass = std::abs(rep.slope + 1.0 / symbol.alpha) <= 0.1;
  }
  rep.pass = rep.slope_pass && usable >= 3;
  return rep;
}

}  // namespace fnse

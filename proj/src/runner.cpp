#include "fnse/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "fnse/checks.hpp"
#include "fnse/feynman_kac.hpp"
#include "fnse/io.hpp"
#include "fnse/parallel.hpp"
#include "fnse/reference.hpp"
#include "fnse/rng.hpp"
#include "fnse/solver.hpp"
#include "fnse/spectral.hpp"

namespace fnse {

namespace {

namespace fs = std::filesystem;

class CheckReport {
 public:
  CheckReport(const fs::path& path)
      : csv_(path, {"check", "parameters", "value", "threshold", "pass"}) {}

  void add(const std::string& check, const std::string& params, double value, double threshold,
           bool pass) {
    csv_.row({check, params, CsvWriter::format(value), CsvWriter::format(threshold),
              pass ? "1" : "0"});
    std::printf("[%s] %s %s value=%.6g threshold=%.6g\n", pass ? "PASS" : "FAIL", check.c_str(),
                params.c_str(), value, threshold);
    all_pass_ = all_pass_ && pass;
  }

  bool all_pass() const { return all_pass_; }
  void finish() { csv_.finish(); }

 private:
  CsvWriter csv_;
  bool all_pass_ = true;
};

std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// verify-levy: sampler fidelity against the closed-form characteristic
// function, symbol condition, pooled stationarity.

int run_verify_levy(const RunConfig& cfg, const fs::path& out_dir) {
  CheckReport report(out_dir / "levy_report.csv");
  const long m = std::lround(100000 * cfg.samples_scale);
  const double xi_mags[8] = {0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0};

  for (double alpha : {1.2, 1.5, 1.8}) {
    for (int d : {1, 2}) {
      for (double dt : {0.05, 0.2}) {
        IncrementSampler s{LevySymbol::isotropic(alpha, 1.0), d, SamplingScheme::exact_stable,
                           0.0, derive_stream(cfg.master_seed, 0x1E71)};
        std::vector<Eigen::VectorXd> samples(static_cast<std::size_t>(m));
        parallel_for(std::size_t(m), [&](std::size_t i) {
          samples[i] = sample_increment(s, dt, std::uint64_t(i));
        });
        double worst = 0.0;
        for (double mag : xi_mags) {
          Eigen::VectorXd xi = Eigen::VectorXd::Zero(d);
          xi[0] = mag;
          const auto est = empirical_cf(samples, xi);
          const double target = std::exp(-dt * std::pow(mag, alpha));
          const double z_re =
              std::abs(est.mean.real() - target) / std::max(est.stderr_re, 1e-300);
          const double z_im = std::abs(est.mean.imag()) / std::max(est.stderr_im, 1e-300);
          worst = std::max(worst, std::max(z_re, z_im));
        }
        report.add("cf-fidelity", fmt("alpha=%.1f d=%d dt=%.2f m=%ld", alpha, d, dt, m), worst,
                   3.0, worst <= 3.0);
      }
    }
  }

  {
    std::vector<double> mags;
    for (int i = 0; i <= 20; ++i) mags.push_back(std::pow(10.0, 0.1 * i));
    const auto iso = check_symbol_condition(LevySymbol::isotropic(1.5, 1.0), 2, mags);
    report.add("symbol-condition", "kind=isotropic alpha=1.5", iso.ratio_max / iso.ratio_min,
               10.0, iso.pass && iso.asymptotic_regime);
    std::vector<double> high;
    for (double v : mags) high.push_back(10.0 * v);
    const auto tr = check_symbol_condition(LevySymbol::truncated(1.5, 1.0, 1.0), 2, high);
    report.add("symbol-condition", "kind=truncated alpha=1.5", tr.ratio_max / tr.ratio_min,
               10.0, tr.pass && tr.asymptotic_regime);
  }

  {
    // pooled increments against a single long step (KS at level 0.01)
    const double dt = 0.05;
    const int pool = 4;
    IncrementSampler s{LevySymbol::isotropic(1.5, 1.0), 1, SamplingScheme::exact_stable, 0.0,
                       derive_stream(cfg.master_seed, 0x57A7)};
    std::vector<double> pooled(static_cast<std::size_t>(m)), direct(static_cast<std::size_t>(m));
    parallel_for(std::size_t(m), [&](std::size_t i) {
      double acc = 0.0, v[1];
      for (int j = 0; j < pool; ++j) {
        sample_increment(s, dt, std::uint64_t(i), 10 + std::uint32_t(j), v);
        acc += v[0];
      }
      pooled[i] = acc;
      sample_increment(s, pool * dt, std::uint64_t(i), 0, v);
      direct[i] = v[0];
    });
    std::sort(pooled.begin(), pooled.end());
    std::sort(direct.begin(), direct.end());
    double ks = 0.0;
    std::size_t i = 0, j = 0;
    while (i < pooled.size() && j < direct.size()) {
      if (pooled[i] <= direct[j]) ++i; else ++j;
      ks = std::max(ks, std::abs(double(i) - double(j)) / double(m));
    }
    const double crit = 1.628 * std::sqrt(2.0 / double(m));
    report.add("pooled-stationarity", fmt("n=%d dt=%.2f m=%ld", pool, dt, m), ks, crit,
               ks <= crit);
  }

  report.finish();
  return report.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify-fields: spectral calculus identities.

int run_verify_fields(const RunConfig& cfg, const fs::path& out_dir) {
  CheckReport report(out_dir / "fields_report.csv");
  const PeriodicGrid g(2, 32);
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  const auto noise = white_noise_field(g, 2, derive_stream(cfg.master_seed, 0xF1E1));

  const auto proj = leray_project(noise);
  const auto twice = leray_project(proj);
  const double idem = (twice.values() - proj.values()).cwiseAbs().maxCoeff();
  report.add("leray-idempotence", "n=32 white-noise", idem, 1e-12, idem <= 1e-12);

  const auto grad_g = PeriodicField::from_function(g, 2, [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Eigen::Vector2d(std::cos(x[0]) * std::sin(x[1]),
                                           std::sin(x[0]) * std::cos(x[1])));
  });
  const double annihilation = leray_project(grad_g).max_abs();
  report.add("leray-annihilates-gradients", "g=sin.sin", annihilation, 1e-12,
             annihilation <= 1e-12);

  const double div = max_divergence(proj) / std::max(1.0, proj.max_abs());
  report.add("projected-divergence", "n=32 white-noise", div, 1e-10, div <= 1e-10);

  const auto a = semigroup_apply(semigroup_apply(noise, -0.3, sym, 2.0), -0.5, sym, 2.0);
  const auto b = semigroup_apply(noise, -0.8, sym, 2.0);
  const double law =
      (a.values() - b.values()).cwiseAbs().maxCoeff() / std::max(1.0, noise.max_abs());
  report.add("semigroup-law", "t=-0.3;-0.5 nu=2", law, 1e-12, law <= 1e-12);

  const double contraction =
      lp_norm(semigroup_apply(noise, -0.2, sym, 1.0), 2.0) / lp_norm(noise, 2.0);
  report.add("semigroup-l2-contraction", "t=-0.2 nu=1", contraction, 1.0, contraction <= 1.0);

  report.finish();
  return report.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify-feynman-kac: representation vs deterministic mild solution, volume
// preservation of the flow.

int run_verify_fk(const RunConfig& cfg, const fs::path& out_dir) {
  CheckReport report(out_dir / "feynman_kac_report.csv");
  const PeriodicGrid g(2, 32);

  {
    const auto phi = PeriodicField::from_function(g, 1, [](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(1, std::cos(x[0]));
    });
    PideProblem prob{FieldHistory::frozen(taylor_green(g), -1.0, true, true), phi,
                     LevySymbol::isotropic(1.5, 1.0), 2.0, std::nullopt};
    const double t = -0.1;
    const auto sol = mild_solve(prob, t, 100);

    FkOptions opt;
    opt.dt = 1e-3;
    opt.stream = derive_stream(cfg.master_seed, 0xFE11);
    const int M = int(std::lround(10000 * cfg.samples_scale));
    CounterRng pick(derive_stream(cfg.master_seed, 0x9011), 0, 0);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const Eigen::Vector2d x(kTwoPi * pick.uniform(), kTwoPi * pick.uniform());
      const auto est = estimate_h(prob, x, t, M, opt);
      const double want = interpolate(sol.slices.back(), x, InterpMode::spectral)[0];
      const double excess =
          (std::abs(est.mean[0] - want) - 3.0 * est.stderr_[0]) / (5.0 * opt.dt);
      worst = std::max(worst, excess);
    }
    report.add("estimate-h-vs-mild",
               fmt("taylor-green nu=2 t=-0.1 M=%d points=20", M), worst, 1.0, worst <= 1.0);
  }

  {
    const auto u = FieldHistory::frozen(taylor_green(g), -1.0, true, true);
    const int M = int(std::lround(10000 * cfg.samples_scale));
    double dev[2];
    int k = 0;
    for (double dt : {1e-3, 5e-4}) {
      FlowConfig fc;
      fc.dt = dt;
      fc.sampler = IncrementSampler{LevySymbol::isotropic(1.5, 1.0), 2,
                                    SamplingScheme::exact_stable, 0.0,
                                    derive_stream(cfg.master_seed, 0xA4)};
      EnsembleSummary sum;
      flow_ensemble(Eigen::Vector2d(1.0, 2.0), -0.2, u, fc, M, 0, &sum);
      dev[k] = std::abs(sum.det_jacobian.mean - 1.0);
      report.add("volume-preservation", fmt("taylor-green t=-0.2 dt=%.0e M=%d", dt, M),
                 sum.det_jacobian.mean, 1.02,
                 sum.det_jacobian.mean >= 0.98 && sum.det_jacobian.mean <= 1.02);
      ++k;
    }
    report.add("volume-dt-refinement", "dt halved", dev[1], dev[0] + 1e-4,
               dev[1] <= dev[0] + 1e-4);
  }

  report.finish();
  return report.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify-estimates: smoothing exponents, kernel scaling, Krylov boundedness.

int run_verify_estimates(const RunConfig& cfg, const fs::path& out_dir) {
  CheckReport report(out_dir / "estimates_report.csv");

  {
    const PeriodicGrid g(2, 64);
    const std::vector<double> nus{1.0, 2.0, 4.0, 8.0};
    const std::vector<double> ts{-0.012, -0.024, -0.048};
    const auto rep = semigroup_smoothing_check(LevySymbol::isotropic(1.5, 1.0), g, nus, ts, 4.0);
    report.add("semigroup-smoothing-slope", "alpha=1.5 nu={1..8}", rep.slope, -2.0 / 3.0,
               rep.slope_pass);
    report.add("semigroup-smoothing-collapse", "spread over nu|t|", rep.collapse_spread, 0.10,
               rep.collapse_pass);
  }

  {
    const PeriodicGrid g(2, 32);
    const auto u = taylor_green(g);
    const std::vector<double> nus{4.0, 8.0};
    const std::vector<double> ts{-0.05, -0.1, -0.2};
    const auto rep =
        mild_gradient_bound_check(u, LevySymbol::isotropic(1.5, 0.25), nus, ts, 40, 4.0);
    report.add("mild-gradient-slope", "taylor-green sigma=0.25", rep.slope, -2.0 / 3.0,
               rep.slope_pass);
  }

  {
    const PeriodicGrid g(2, 32);
    const auto u = FieldHistory::frozen(taylor_green(g), -1.0, true, true);
    const auto phi = band_limited_field(g, 1, 10, derive_stream(cfg.master_seed, 0xB4D));
    const std::vector<double> nus{1.0, 2.0, 4.0};
    const std::vector<double> ts{-0.05, -0.1, -0.2};
    const int M = int(std::lround(10000 * cfg.samples_scale));
    const auto rep = sde_gradient_check(u, LevySymbol::isotropic(1.5, 0.25), nus, ts, phi, M,
                                        5e-3, derive_stream(cfg.master_seed, 0x5DE));
    report.add("sde-gradient-slope", fmt("taylor-green M=%d/node", M), rep.slope, -2.0 / 3.0,
               rep.slope_pass);
    report.add("sde-gradient-usable", "noise below 10% of signal", double(rep.usable_points),
               3.0, rep.usable_points >= 3);
  }

  {
    const long m = std::lround(1000000 * cfg.samples_scale);
    const std::vector<double> ts{-0.1, -0.2, -0.4};
    const auto rep =
        kernel_tail_check(1.5, 1.0, 1, ts, m, derive_stream(cfg.master_seed, 0x6E57));
    report.add("kernel-central-slope", fmt("d=1 M=%ld", m), rep.central_slope, -2.0 / 3.0,
               rep.slope_pass);
    report.add("kernel-tail-stability", "doubling change", rep.tail_doubling_change, 0.2,
               rep.tail_stable);
    report.add("kernel-symmetry", "even density", rep.symmetric ? 0.0 : 1.0, 0.5,
               rep.symmetric);
  }

  {
    const PeriodicGrid g(2, 16);
    const auto u = FieldHistory::frozen(taylor_green(g, 0.5), -1.0, true, true);
    const auto ones = PeriodicField::constant(g, Eigen::VectorXd::Constant(1, 1.0));
    const auto rep = krylov_check(u, ones, LevySymbol::isotropic(1.5, 1.0), 1.0, -0.5,
                                  int(std::lround(2000 * cfg.samples_scale)), 4.0, cfg.q,
                                  2.5e-3, derive_stream(cfg.master_seed, 0x141));
    report.add("krylov-ratio-stable", "f=1 taylor-green", rep.ratio_doubled, rep.ratio * 1.25,
               rep.stable);
  }

  report.finish();
  return report.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// solve / continue / compare

void write_solution(const SolutionHistory& sol, const SolveConfig& scfg,
                    const fs::path& out_dir) {
  CsvWriter manifest(out_dir / "manifest.csv",
                     {"slice", "time", "norm_p", "grad_norm_p", "iterations", "se_aggregate"});
  const int iters = int(sol.iterations.size());
  for (int j = 0; j < sol.u.num_slices(); ++j) {
    char name[64];
    std::snprintf(name, sizeof name, "u_slice_%04d.f64", j);
    dump_field(sol.u.slice(j), sol.u.time(j), out_dir / name);
    manifest.row({std::to_string(j), CsvWriter::format(sol.u.time(j)),
                  CsvWriter::format(sol.norm_track[std::size_t(j)]),
                  CsvWriter::format(sol.grad_norm_track[std::size_t(j)]),
                  std::to_string(iters),
                  CsvWriter::format(sol.se_aggregate[std::size_t(j)])});
  }
  manifest.finish();

  const double grad0 = sol.grad_norm_track.front();
  double grad_sup = 0.0;
  for (double v : sol.grad_norm_track) grad_sup = std::max(grad_sup, v);
  CsvWriter summary(out_dir / "summary.csv",
                    {"horizon", "halvings", "iterations", "converged", "c0", "grad_norm_0",
                     "grad_norm_sup", "norm_bound_ratio"});
  summary.row({CsvWriter::format(sol.horizon), std::to_string(sol.halvings),
               std::to_string(iters), sol.converged ? "1" : "0", CsvWriter::format(scfg.c0),
               CsvWriter::format(grad0), CsvWriter::format(grad_sup),
               CsvWriter::format(grad0 > 0 ? grad_sup / (3.0 * scfg.c0 * grad0) : 0.0)});
  summary.finish();
}

int run_solve(const RunConfig& cfg, const fs::path& out_dir, bool global) {
  SolveConfig scfg = cfg.solve;
  scfg.seed = cfg.master_seed;
  const auto u0 = build_u0(cfg);
  const SolutionHistory sol =
      global ? continue_global(u0, scfg, cfg.horizon) : solve_local(u0, scfg);
  write_solution(sol, scfg, out_dir);
  std::printf("[%s] %s horizon=%.6g slices=%d iterations=%zu halvings=%d\n",
              sol.converged ? "PASS" : "FAIL", global ? "continue" : "solve", sol.horizon,
              sol.u.num_slices(), sol.iterations.size(), sol.halvings);
  return sol.converged ? 0 : 1;
}

SpectralRun load_run(const fs::path& dir) {
  SpectralRun run;
  for (int j = 0;; ++j) {
    char name[64];
    std::snprintf(name, sizeof name, "u_slice_%04d.f64", j);
    const fs::path p = dir / name;
    if (!fs::exists(p)) break;
    auto loaded = load_field(p);
    run.times.push_back(loaded.time);
    run.fields.push_back(std::move(loaded.field));
  }
  if (run.fields.empty())
    throw std::runtime_error("compare: no u_slice_*.f64 dumps in " + dir.string());
  return run;
}

int run_compare(const RunConfig& cfg, const fs::path& out_dir) {
  const auto a = load_run(cfg.compare_a);
  const auto b = load_run(cfg.compare_b);
  const auto errors = compare_fields(a, b, 2.0);
  CsvWriter csv(out_dir / "compare.csv", {"time", "rel_error_l2", "budget", "pass"});
  bool all = true;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const bool ok = errors[i] <= cfg.compare_budget;
    all = all && ok;
    csv.row({CsvWriter::format(a.times[i]), CsvWriter::format(errors[i]),
             CsvWriter::format(cfg.compare_budget), ok ? "1" : "0"});
    std::printf("[%s] compare t=%.6g rel_error=%.4g budget=%.4g\n", ok ? "PASS" : "FAIL",
                a.times[i], errors[i], cfg.compare_budget);
  }
  csv.finish();
  return all ? 0 : 1;
}

}  // namespace

int run(const RunConfig& config) {
  if (config.workers > 0) worker_count() = config.workers;
  fs::path out_dir = config.output_dir.empty() ? fs::path("fnse_out") : fs::path(config.output_dir);
  fs::create_directories(out_dir);

  switch (config.command) {
    case Command::verify_levy: return run_verify_levy(config, out_dir);
    case Command::verify_fields: return run_verify_fields(config, out_dir);
    case Command::verify_feynman_kac: return run_verify_fk(config, out_dir);
    case Command::verify_estimates: return run_verify_estimates(config, out_dir);
    case Command::solve: return run_solve(config, out_dir, false);
    case Command::continue_run: return run_solve(config, out_dir, true);
    case Command::compare: return run_compare(config, out_dir);
  }
  throw std::logic_error("run: unreachable");
}

}  // namespace fnse

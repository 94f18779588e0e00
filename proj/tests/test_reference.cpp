#include <doctest.h>

#include <cmath>

#include "fnse/reference.hpp"
#include "fnse/spectral.hpp"
#include "oracles.hpp"

using namespace fnse;

TEST_CASE("zero terminal data stays zero") {
  const PeriodicGrid g(2, 32);
  const auto run = solve_fnse_spectral(PeriodicField::zero(g, 2),
                                       LevySymbol::isotropic(1.5, 1.0), 1.0, -0.5, 1e-2, 5);
  for (const auto& f : run.fields) CHECK(f.max_abs() == 0.0);
}

TEST_CASE("linear regime decays at the exact multiplier rate") {
  const PeriodicGrid g(2, 32);
  const auto u0 = single_mode(g, Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0), 1e-3);
  const auto run = solve_fnse_spectral(u0, LevySymbol::isotropic(1.5, 1.0), 1.0, -1.0, 5e-3, 4);
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const double decay = std::exp(run.times[i]);  // |k| = 1, nu sigma = 1
    const double dev = (run.fields[i].values() - decay * u0.values()).cwiseAbs().maxCoeff();
    CHECK(dev <= 1e-6 * 1e-3);
  }
}

TEST_CASE("Taylor-Green evolves as a pure multiplier to machine accuracy") {
  // (u.grad)u is a gradient for this field: the projected nonlinearity must
  // vanish identically, leaving the exact fractional decay
  const PeriodicGrid g(2, 64);
  const auto u0 = taylor_green(g);
  const auto run = solve_fnse_spectral(u0, LevySymbol::isotropic(1.5, 1.0), 1.0, -0.5, 2e-3, 5);
  const double rate = std::pow(2.0, 0.75);  // |k| = sqrt(2)
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const double decay = std::exp(run.times[i] * rate);
    const double dev = (run.fields[i].values() - decay * u0.values()).cwiseAbs().maxCoeff();
    CHECK(dev <= 1e-11);
  }
}

TEST_CASE("fourth-order self-convergence in time") {
  const PeriodicGrid g(2, 32);
  PeriodicField u0 = leray_project(band_limited_field(g, 2, 4, 12));
  u0 = mean_subtract(u0);
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  const auto fine = solve_fnse_spectral(u0, sym, 1.0, -0.25, 0.25 / 512, 1);
  double err[2];
  int i = 0;
  for (int steps : {32, 64}) {
    const auto run = solve_fnse_spectral(u0, sym, 1.0, -0.25, 0.25 / steps, 1);
    err[i++] = (run.fields.back().values() - fine.fields.back().values()).cwiseAbs().maxCoeff();
  }
  CHECK(err[0] / err[1] >= 10.0);
}

TEST_CASE("divergence-free and energy decay along the run") {
  const PeriodicGrid g(2, 32);
  PeriodicField u0 = mean_subtract(leray_project(band_limited_field(g, 2, 5, 3)));
  const auto run = solve_fnse_spectral(u0, LevySymbol::isotropic(1.5, 1.0), 1.0, -0.4, 2e-3, 8);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& f : run.fields) {
    CHECK(max_divergence(f) <= 1e-10 * std::max(1.0, f.max_abs()));
    const double e = lp_norm(f, 2.0);
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
}

TEST_CASE("weak form pins the advective sign") {
  // <u_t, phi> - <u_0, phi> - int_t^0 [<u_s, L* phi> + <(u.grad)u, phi>] ds = 0;
  // a flipped nonlinear sign leaves a residual of twice the advective term
  const PeriodicGrid g(2, 32);
  const PeriodicField u0 = mean_subtract(leray_project(band_limited_field(g, 2, 3, 21)));
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  const double nu = 1.0;
  const int K = 40;
  const auto run = solve_fnse_spectral(u0, sym, nu, -0.2, 1e-3, K);

  const auto phi = leray_project(band_limited_field(g, 2, 2, 77));
  const auto lphi = generator_apply_dual(phi, sym, nu);

  double advective_scale = 0.0;
  std::vector<double> integrand(run.times.size());
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    const auto& u = run.fields[i];
    const auto grad = spectral_gradient(u);
    Eigen::MatrixXd adv(g.num_nodes(), 2);
    for (int c = 0; c < 2; ++c) {
      adv.col(c) = u.values().col(0).cwiseProduct(grad.values().col(c * 2 + 0)) +
                   u.values().col(1).cwiseProduct(grad.values().col(c * 2 + 1));
    }
    const PeriodicField advf(g, std::move(adv));
    const double a_term = inner_product(advf, phi);
    integrand[i] = inner_product(u, lphi) + a_term;
    advective_scale = std::max(advective_scale, std::abs(a_term));
  }
  // trapezoid from t = horizon to 0 (times descending)
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < run.times.size(); ++i)
    acc += 0.5 * (integrand[i] + integrand[i + 1]) * (run.times[i] - run.times[i + 1]);
  const double residual =
      inner_product(run.fields.back(), phi) - inner_product(run.fields.front(), phi) - acc;
  REQUIRE(advective_scale > 1e-4);  // the check must be sensitive
  CHECK(std::abs(residual) <= 1e-3 * advective_scale + 1e-8);
}

TEST_CASE("Burgers: mass conserved, self-convergent") {
  const PeriodicGrid g(1, 128);
  const auto u0 = PeriodicField::from_function(g, 1, [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, std::sin(x[0]));
  });
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  const auto run = solve_burgers_spectral(u0, sym, 1.0, -0.5, 1e-3, 5);
  const auto ones = PeriodicField::constant(g, Eigen::VectorXd::Constant(1, 1.0));
  const double m0 = inner_product(run.fields.front(), ones);
  for (const auto& f : run.fields) CHECK(std::abs(inner_product(f, ones) - m0) <= 1e-10);

  const auto fine = solve_burgers_spectral(u0, sym, 1.0, -0.5, 0.5 / 1024, 1);
  double err[2];
  int i = 0;
  for (int steps : {64, 128}) {
    const auto r = solve_burgers_spectral(u0, sym, 1.0, -0.5, 0.5 / steps, 1);
    err[i++] = (r.fields.back().values() - fine.fields.back().values()).cwiseAbs().maxCoeff();
  }
  CHECK(err[0] / err[1] >= 10.0);
}

TEST_CASE("compare_fields basics") {
  const PeriodicGrid g(2, 16);
  const auto u0 = taylor_green(g);
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  auto a = solve_fnse_spectral(u0, sym, 1.0, -0.2, 1e-2, 4);
  const auto zero = compare_fields(a, a, 2.0);
  for (double e : zero) CHECK(e == 0.0);

  SpectralRun doubled = a;
  for (auto& f : doubled.fields) f = PeriodicField(g, 2.0 * f.values());
  const auto one = compare_fields(doubled, a, 2.0);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i] == doctest::Approx(0.5).epsilon(1e-12));

  // interpolation in time across different ladders
  auto b = solve_fnse_spectral(u0, sym, 1.0, -0.2, 1e-2, 8);
  const auto cross = compare_fields(a, b, 2.0);
  for (double e : cross) CHECK(e <= 1e-8);
}

TEST_CASE("CFL guard") {
  const PeriodicGrid g(2, 64);
  const auto u0 = taylor_green(g, 50.0);
  CHECK_THROWS_AS(solve_fnse_spectral(u0, LevySymbol::isotropic(1.5, 1.0), 1.0, -0.5, 0.5, 5),
                  std::invalid_argument);
}

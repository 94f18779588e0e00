#include <doctest.h>

#include <cmath>

#include "fnse/checks.hpp"
#include "fnse/spectral.hpp"
#include "oracles.hpp"

using namespace fnse;

TEST_CASE("kernel tail: central-density scaling, symmetry, doubling stability") {
  const std::vector<double> ts{-0.1, -0.2, -0.4};
  const auto rep = kernel_tail_check(1.5, 1.0, 1, ts, 200000, 99);
  CHECK(rep.slope_target == doctest::Approx(-2.0 / 3.0));
  CHECK(rep.slope_pass);
  CHECK(rep.symmetric);
  CHECK(rep.tail_stable);
  CHECK(rep.pass);
  for (const auto& pt : rep.per_t) {
    CHECK(std::isfinite(pt.tail_sup));
    CHECK(pt.density0 > 0.0);
  }
  CHECK_THROWS_AS(kernel_tail_check(1.5, 1.0, 2, ts, 1000, 1), std::invalid_argument);
}

TEST_CASE("semigroup smoothing: slope and viscosity collapse") {
  const PeriodicGrid g(2, 64);
  const std::vector<double> nus{1.0, 2.0, 4.0, 8.0};
  const std::vector<double> ts{-0.012, -0.024, -0.048};
  const auto rep = semigroup_smoothing_check(LevySymbol::isotropic(1.5, 1.0), g, nus, ts,
                                             std::numeric_limits<double>::infinity());
  CHECK(std::abs(rep.slope + 2.0 / 3.0) <= 0.1);
  CHECK(rep.collapse_spread <= 0.10);
  CHECK(rep.pass);
}

TEST_CASE("smoothing check: single smooth mode stays bounded near t = 0") {
  // for an already-smooth input the gain is capped by |k| e^{t nu psi(k)}
  const PeriodicGrid g(2, 32);
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  const auto f = single_mode(g, Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 1), 1.0);
  for (double t : {-1e-4, -1e-3, -1e-2}) {
    const double r = sobolev_norm(semigroup_apply(f, t, sym, 1.0), 1,
                                  std::numeric_limits<double>::infinity()) /
                     lp_norm(f, std::numeric_limits<double>::infinity());
    CHECK(r <= 2.0 * std::exp(t * std::pow(2.0, 1.5)) + 1e-12);
  }
}

TEST_CASE("SDE gradient decay under a Taylor-Green drift") {
  const PeriodicGrid g(2, 32);
  const auto u = FieldHistory::frozen(taylor_green(g), -1.0, true, true);
  // sigma chosen so the extremizing frequency stays inside the band of phi
  // over the sampled nu |t| range
  const auto sym = LevySymbol::isotropic(1.5, 0.25);
  const auto phi = band_limited_field(g, 1, 10, 7);
  const std::vector<double> nus{1.0, 2.0, 4.0};
  const std::vector<double> ts{-0.05, -0.1, -0.2};
  const auto rep = sde_gradient_check(u, sym, nus, ts, phi, 1000, 5e-3, 321);
  CHECK(rep.usable_points >= 5);
  CHECK(std::abs(rep.slope + 2.0 / 3.0) <= 0.15);
  CHECK(rep.pass);
}

TEST_CASE("SDE gradient check reduces to the semigroup for zero drift") {
  const PeriodicGrid g(2, 16);
  const auto u = FieldHistory::frozen(PeriodicField::zero(g, 2), -1.0, true, true);
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  const auto phi = single_mode(g, Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), 1.0);
  // scalar probe: first component of the mode
  const auto probe = PeriodicField(g, phi.values().col(1));
  const std::vector<double> nus{1.0};
  const std::vector<double> ts{-0.3};
  const auto rep = sde_gradient_check(u, sym, nus, ts, probe, 4000, 5e-3, 5);
  REQUIRE(rep.points.size() == 1);
  // E cos(x1 + noise) = e^{-nu |t|} cos(x1): gradient sup = e^{-0.3}
  CHECK(rep.points[0].grad_sup ==
        doctest::Approx(std::exp(-0.3)).epsilon(0.05));
}

TEST_CASE("Krylov check: exact constant case and bump family boundedness") {
  const PeriodicGrid g(2, 16);
  const auto u = FieldHistory::frozen(taylor_green(g, 0.5), -1.0, true, true);
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  const double t = -0.5, p = 4.0, q = 2.0;

  const auto ones = PeriodicField::constant(g, Eigen::VectorXd::Constant(1, 1.0));
  const auto rep = krylov_check(u, ones, sym, 1.0, t, 400, p, q, 2.5e-3, 11);
  CHECK(rep.path_integral.mean == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.path_integral.stderr_ <= 1e-12);
  CHECK(rep.norm_qp ==
        doctest::Approx(std::pow(0.5, 0.5) * std::pow(kTwoPi, 2.0 / p)).epsilon(1e-12));
  CHECK(rep.stable);

  // shrinking bumps with fixed L^q L^p norm: ratios stay bounded
  double ratios[3];
  int i = 0;
  for (double r : {0.5, 0.25, 0.125}) {
    auto bump = PeriodicField::from_function(g, 1, [r](const Eigen::VectorXd& x) {
      const double dx = x[0] - M_PI, dy = x[1] - M_PI;
      return Eigen::VectorXd::Constant(1, std::exp(-(dx * dx + dy * dy) / (2.0 * r * r)));
    });
    bump = PeriodicField(g, bump.values() / lp_norm(bump, p));
    const auto br = krylov_check(u, bump, sym, 1.0, t, 2000, p, q, 2.5e-3, 13);
    CHECK(br.stable);
    ratios[i++] = br.ratio;
  }
  const double lo = std::min({ratios[0], ratios[1], ratios[2]});
  const double hi = std::max({ratios[0], ratios[1], ratios[2]});
  CHECK(hi / std::max(lo, 1e-12) <= 5.0);

  // drift dependence enters only through the kappa bound
  const auto zero_u = FieldHistory::frozen(PeriodicField::zero(g, 2), -1.0, true, true);
  const auto rep0 = krylov_check(zero_u, ones, sym, 1.0, t, 400, p, q, 2.5e-3, 17);
  CHECK(rep.ratio / rep0.ratio <= 3.0);
  CHECK(rep0.ratio / rep.ratio <= 3.0);

  CHECK_THROWS_AS(krylov_check(u, ones, sym, 1.0, t, 100, 1.0, q, 2.5e-3, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(krylov_check(u, ones, sym, 1.0, t, 100, p, 1.1, 2.5e-3, 1),
                  std::invalid_argument);
}

TEST_CASE("mild gradient bound: slope across (nu, t)") {
  const PeriodicGrid g(2, 32);
  const auto u = taylor_green(g);
  const auto sym = LevySymbol::isotropic(1.5, 0.25);
  const std::vector<double> nus{4.0, 8.0};
  const std::vector<double> ts{-0.05, -0.1, -0.2};
  const auto rep = mild_gradient_bound_check(u, sym, nus, ts, 40, 4.0);
  CHECK(rep.points.size() == 6);
  int usable = 0;
  for (const auto& pt : rep.points) usable += pt.usable ? 1 : 0;
  CHECK(usable >= 4);
  CHECK(std::abs(rep.slope + 2.0 / 3.0) <= 0.1);
  CHECK(rep.pass);
}

TEST_CASE("mild gradient bound: doubling the viscosity rescales by 2^{-1/alpha}") {
  const PeriodicGrid g(2, 32);
  const auto u = taylor_green(g);
  const auto sym = LevySymbol::isotropic(1.5, 0.25);
  const std::vector<double> nus{4.0, 8.0};
  const std::vector<double> ts{-0.1};
  const auto rep = mild_gradient_bound_check(u, sym, nus, ts, 40, 4.0);
  REQUIRE(rep.points.size() == 2);
  REQUIRE(rep.points[0].usable);
  REQUIRE(rep.points[1].usable);
  const double measured = rep.points[1].grad_gain / rep.points[0].grad_gain;
  CHECK(measured == doctest::Approx(std::pow(2.0, -2.0 / 3.0)).epsilon(0.08));
}

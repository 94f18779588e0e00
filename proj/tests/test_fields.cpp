#include <doctest.h>

#include <cmath>

#include "fnse/field.hpp"
#include "fnse/spectral.hpp"
#include "oracles.hpp"

using namespace fnse;

namespace {

PeriodicField scalar_fn(const PeriodicGrid& g,
                        const std::function<double(const Eigen::VectorXd&)>& f) {
  return PeriodicField::from_function(g, 1, [&](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, f(x));
  });
}

}  // namespace

TEST_CASE("gradient of a single Fourier mode") {
  const PeriodicGrid g(2, 32);
  const auto f = scalar_fn(g, [](const Eigen::VectorXd& x) { return std::sin(x[0]); });
  const auto df = spectral_gradient(f);
  REQUIRE(df.comps() == 2);
  double err = 0.0;
  for (Eigen::Index i = 0; i < g.num_nodes(); ++i) {
    const auto x = g.node(i);
    err = std::max(err, std::abs(df.values()(i, 0) - std::cos(x[0])));
    err = std::max(err, std::abs(df.values()(i, 1)));
  }
  CHECK(err <= 1e-12);
}

TEST_CASE("gradient of a constant vanishes") {
  const PeriodicGrid g(2, 16);
  const auto f = PeriodicField::constant(g, Eigen::Vector2d(1.5, -2.0));
  CHECK(spectral_gradient(f).max_abs() <= 1e-13);
}

TEST_CASE("gradient matches 8th-order finite differences at O(h^8)") {
  double prev_err = 0.0;
  for (int n : {64, 128}) {
    const PeriodicGrid g(2, n);
    const auto f = band_limited_field(g, 1, 4, 2024);
    const auto df = spectral_gradient(f);
    double err = 0.0;
    for (Eigen::Index i = 0; i < g.num_nodes(); i += 7) {
      const auto idx = g.unflatten(i);
      for (int axis = 0; axis < 2; ++axis) {
        auto along = [&](int j) {
          auto id2 = idx;
          id2[std::size_t(axis)] = j;
          return f.values()(g.flatten(id2), 0);
        };
        const double fd = oracles::fd8_derivative(along, idx[std::size_t(axis)], n, g.spacing());
        err = std::max(err, std::abs(fd - df.values()(i, axis)));
      }
    }
    if (n == 64) {
      prev_err = err;
      CHECK(err <= 1e-4);
    } else {
      // eighth-order convergence, allow a factor-4 band around 2^-8
      CHECK(err <= prev_err / 64.0);
    }
  }
}

TEST_CASE("divergence identities") {
  const PeriodicGrid g(2, 32);
  const auto shear = PeriodicField::from_function(g, 2, [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Eigen::Vector2d(std::sin(x[1]), 0.0));
  });
  CHECK(max_divergence(shear) <= 1e-12);
  CHECK(max_divergence(PeriodicField::constant(g, Eigen::Vector2d(0.3, 0.7))) <= 1e-13);

  // u = grad g with g = sin x1 sin x2: div u = laplace g = -2 g
  const auto grad_g = PeriodicField::from_function(g, 2, [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Eigen::Vector2d(std::cos(x[0]) * std::sin(x[1]),
                                           std::sin(x[0]) * std::cos(x[1])));
  });
  const auto div = divergence(grad_g);
  double err = 0.0;
  for (Eigen::Index i = 0; i < g.num_nodes(); ++i) {
    const auto x = g.node(i);
    err = std::max(err, std::abs(div.values()(i, 0) + 2.0 * std::sin(x[0]) * std::sin(x[1])));
  }
  CHECK(err <= 1e-12);
}

TEST_CASE("Leray projection: fixed point, annihilation, idempotence") {
  const PeriodicGrid g(2, 32);
  const auto tg = taylor_green(g);
  const auto ptg = leray_project(tg);
  CHECK((ptg.values() - tg.values()).cwiseAbs().maxCoeff() <= 1e-12);

  const auto grad_g = PeriodicField::from_function(g, 2, [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Eigen::Vector2d(std::cos(x[0]) * std::sin(x[1]),
                                           std::sin(x[0]) * std::cos(x[1])));
  });
  CHECK(leray_project(grad_g).max_abs() <= 1e-12);

  const auto r = band_limited_field(g, 2, 10, 99);
  const auto pr = leray_project(r);
  const auto ppr = leray_project(pr);
  CHECK((ppr.values() - pr.values()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(max_divergence(pr) <= 1e-10);
  CHECK(pr.divergence_free());

  // mean mode passes through
  const auto c = PeriodicField::constant(g, Eigen::Vector2d(0.4, -0.2));
  CHECK((leray_project(c).values() - c.values()).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("Leray projection is self-adjoint in the grid inner product") {
  const PeriodicGrid g(2, 32);
  const auto u = band_limited_field(g, 2, 9, 5);
  const auto v = band_limited_field(g, 2, 9, 6);
  CHECK(std::abs(inner_product(leray_project(u), v) - inner_product(u, leray_project(v))) <=
        1e-10);
}

TEST_CASE("semigroup: identity, single-mode decay, semigroup law, contraction") {
  const PeriodicGrid g(2, 32);
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  const auto f = scalar_fn(g, [](const Eigen::VectorXd& x) { return std::cos(x[0]); });

  CHECK((semigroup_apply(f, 0.0, sym, 1.0).values() - f.values()).cwiseAbs().maxCoeff() <=
        1e-13);
  CHECK_THROWS_AS(semigroup_apply(f, 0.5, sym, 1.0), std::invalid_argument);

  const auto ft = semigroup_apply(f, -1.0, sym, 1.0);
  double err = 0.0;
  for (Eigen::Index i = 0; i < g.num_nodes(); ++i) {
    err = std::max(err,
                   std::abs(ft.values()(i, 0) - std::exp(-1.0) * std::cos(g.node(i)[0])));
  }
  CHECK(err <= 1e-12);

  const auto noise = white_noise_field(g, 1, 31);
  const auto a = semigroup_apply(semigroup_apply(noise, -0.3, sym, 2.0), -0.5, sym, 2.0);
  const auto b = semigroup_apply(noise, -0.8, sym, 2.0);
  CHECK((a.values() - b.values()).cwiseAbs().maxCoeff() <= 1e-12 * noise.max_abs());

  CHECK(lp_norm(semigroup_apply(noise, -0.2, sym, 1.0), 2.0) <= lp_norm(noise, 2.0));

  const auto g1 = spectral_gradient(semigroup_apply(noise, -0.4, sym, 1.0));
  const auto g2 = semigroup_apply(spectral_gradient(noise), -0.4, sym, 1.0);
  CHECK((g1.values() - g2.values()).cwiseAbs().maxCoeff() <= 1e-12 * g1.max_abs());
}

TEST_CASE("semigroup gradient smoothing rate is -1/alpha") {
  // worst-case mode family: the gradient gain over single modes realizes the
  // operator bound; the extremizing mode k* = (alpha nu sigma |t|)^{-1/alpha}
  // must stay inside (1, N/2) over the fitted window
  const PeriodicGrid g(2, 64);
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  std::vector<double> lx, ly;
  for (double t = -0.01; t >= -0.17; t *= 2.0) {
    double best = 0.0;
    for (int k = 1; k <= g.n / 4; k *= 2) {
      const auto f = scalar_fn(g, [k](const Eigen::VectorXd& x) { return std::cos(k * x[0]); });
      const double r = lp_norm(spectral_gradient(semigroup_apply(f, t, sym, 1.0)),
                               std::numeric_limits<double>::infinity());
      best = std::max(best, r);
    }
    lx.push_back(std::log(-t));
    ly.push_back(std::log(best));
  }
  const auto fit = oracles::fit_line(lx, ly);
  CHECK(std::abs(fit.slope + 1.0 / 1.5) <= 0.1);
}

TEST_CASE("interpolation: spectral exactness and the direct-summation oracle") {
  const PeriodicGrid g(2, 32);
  const auto f = scalar_fn(g, [](const Eigen::VectorXd& x) { return std::sin(x[0]); });
  Eigen::Vector2d p(0.5 * M_PI, 1.234);
  CHECK(interpolate(f, p)[0] == doctest::Approx(1.0).epsilon(1e-12));

  // any field at a node returns the stored value
  const auto r = band_limited_field(g, 2, 9, 77);
  const Eigen::Index node = 123;
  const auto at_node = interpolate(r, g.node(node));
  CHECK(std::abs(at_node[0] - r.values()(node, 0)) <= 1e-12);
  CHECK(std::abs(at_node[1] - r.values()(node, 1)) <= 1e-12);
  const auto lin_at_node = interpolate(r, g.node(node), InterpMode::linear);
  CHECK(std::abs(lin_at_node[0] - r.values()(node, 0)) <= 1e-12);

  auto mode_of = [&](Eigen::Index m) {
    const auto idx = g.unflatten(m);
    Eigen::VectorXd k(2);
    for (int a = 0; a < 2; ++a) k[a] = g.wavenumber(idx[std::size_t(a)]);
    return k;
  };
  CounterRng rng(4242, 0, 0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d x(kTwoPi * rng.uniform(), kTwoPi * rng.uniform());
    const auto got = interpolate(r, x);
    const double want = oracles::direct_fourier_sum(r.coeffs().col(0), mode_of, x);
    CHECK(std::abs(got[0] - want) <= 1e-10);
  }
}

TEST_CASE("Sobolev norms") {
  const PeriodicGrid g(2, 32);
  const auto c = PeriodicField::constant(g, Eigen::VectorXd::Constant(1, -2.5));
  CHECK(sobolev_norm(c, 0, 2.0) == doctest::Approx(2.5 * kTwoPi).epsilon(1e-12));

  const auto f = scalar_fn(g, [](const Eigen::VectorXd& x) { return std::sin(x[0]); });
  CHECK(sobolev_norm(f, 0, 2.0) ==
        doctest::Approx(std::sqrt(2.0 * M_PI * M_PI)).epsilon(1e-12));
  CHECK(sobolev_norm(f, 0, 2.0) == doctest::Approx(4.442883).epsilon(1e-6));

  // refined-grid quadrature oracle
  const auto tg32 = taylor_green(PeriodicGrid(2, 32));
  const auto tg512 = taylor_green(PeriodicGrid(2, 512));
  const double n32 = sobolev_norm(tg32, 1, 4.0);
  const double n512 = sobolev_norm(tg512, 1, 4.0);
  CHECK(n32 == doctest::Approx(n512).epsilon(1e-3));

  CHECK(sobolev_norm(f, 0, std::numeric_limits<double>::infinity()) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mean subtraction and dealiasing") {
  const PeriodicGrid g(2, 32);
  auto f = PeriodicField::from_function(g, 1, [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, 2.0 + std::cos(x[0]) + std::cos(12.0 * x[0]));
  });
  const auto ms = mean_subtract(f);
  CHECK(std::abs(ms.values().col(0).mean()) <= 1e-13);

  const auto da = dealias_two_thirds(f);  // cut = 10: kills k = 12, keeps k = 1
  double err = 0.0;
  for (Eigen::Index i = 0; i < g.num_nodes(); ++i) {
    err = std::max(err, std::abs(da.values()(i, 0) - 2.0 - std::cos(g.node(i)[0])));
  }
  CHECK(err <= 1e-12);
}

TEST_CASE("three dimensions round trip") {
  const PeriodicGrid g(3, 8);
  const auto f = scalar_fn(g, [](const Eigen::VectorXd& x) {
    return std::sin(x[2]) + std::cos(x[0] + x[1]);
  });
  const auto df = spectral_gradient(f);
  double err = 0.0;
  for (Eigen::Index i = 0; i < g.num_nodes(); ++i) {
    const auto x = g.node(i);
    err = std::max(err, std::abs(df.values()(i, 2) - std::cos(x[2])));
    err = std::max(err, std::abs(df.values()(i, 0) + std::sin(x[0] + x[1])));
  }
  CHECK(err <= 1e-12);
  const auto back = PeriodicField::from_coeffs(g, f.coeffs());
  CHECK((back.values() - f.values()).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("velocity history: blending and divergence enforcement") {
  const PeriodicGrid g(2, 16);
  const auto a = taylor_green(g, 1.0);
  const auto b = taylor_green(g, 0.5);
  FieldHistory hist({0.0, -1.0}, {a, b}, true, true);
  CHECK(hist.horizon() == -1.0);

  int idx;
  double theta;
  hist.locate(-0.25, idx, theta);
  CHECK(idx == 0);
  CHECK(theta == doctest::Approx(0.25));
  const auto mid = hist.values_at(-0.5);
  CHECK((mid - 0.75 * a.values()).cwiseAbs().maxCoeff() <= 1e-13);

  CHECK_THROWS_AS(hist.locate(-1.5, idx, theta), std::invalid_argument);
  CHECK_THROWS_AS(hist.locate(0.5, idx, theta), std::invalid_argument);

  // non-divergence-free slice is rejected
  const auto bad = PeriodicField::from_function(g, 2, [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Eigen::Vector2d(std::sin(x[0]), 0.0));
  });
  CHECK_THROWS_AS(FieldHistory({0.0, -1.0}, {bad, bad}, true, false), std::invalid_argument);

  CHECK(hist.gradient_slice(0).comps() == 4);
}

TEST_CASE("grid index round trip") {
  const PeriodicGrid g(3, 8);
  for (Eigen::Index i : {0L, 17L, 101L, 511L}) {
    CHECK(g.flatten(g.unflatten(i)) == i);
  }
  CHECK_THROWS_AS(PeriodicGrid(2, 17), std::invalid_argument);
  CHECK_THROWS_AS(PeriodicGrid(4, 16), std::invalid_argument);
}

#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "fnse/levy.hpp"
#include "oracles.hpp"

using namespace fnse;

namespace {

std::vector<Eigen::VectorXd> draw_increments(const IncrementSampler& s, double dt, int m,
                                             std::uint32_t step = 0) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(std::size_t(m));
  for (int i = 0; i < m; ++i) out.push_back(sample_increment(s, dt, std::uint64_t(i), step));
  return out;
}

}  // namespace

TEST_CASE("isotropic symbol closed form") {
  const auto sym = LevySymbol::isotropic(1.5, 1.0);
  CHECK(symbol_eval(sym, Eigen::Vector2d(0, 0)).real() == 0.0);
  const auto v = symbol_eval(sym, Eigen::Vector2d(2, 0));
  CHECK(v.real() == doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-12));
  CHECK(std::abs(v.imag()) <= 1e-12);
  // even in xi
  CHECK(symbol_eval(sym, Eigen::Vector2d(-2, 0)).real() ==
        doctest::Approx(v.real()).epsilon(1e-14));
  CHECK_THROWS_AS(symbol_eval(sym, Eigen::Vector2d(std::nan(""), 0)), std::invalid_argument);
}

TEST_CASE("truncated symbol matches direct quadrature oracle") {
  const double alpha = 1.5, sigma = 1.0, a = 1.0;
  const auto sym = LevySymbol::truncated(alpha, sigma, a);

  const double c2 = stable_density_constant(2, alpha);
  const double expect2 = oracles::truncated_symbol_radial(2, 3.0, alpha, sigma, a, c2);
  const double got2 = symbol_eval(sym, Eigen::Vector2d(3, 0)).real();
  CHECK(got2 == doctest::Approx(expect2).epsilon(0).scale(1).epsilon(1e-8));
  CHECK(std::abs(got2 - expect2) <= 1e-8);

  const double c1 = stable_density_constant(1, alpha);
  const double expect1 = oracles::truncated_symbol_radial(1, 3.0, alpha, sigma, a, c1);
  const double got1 = symbol_eval_radial(sym, 3.0, 1);
  CHECK(std::abs(got1 - expect1) <= 1e-8);
}

TEST_CASE("fast Bessel branch agrees with the standard library") {
  for (double u : {50.0, 63.7, 120.1, 500.3, 1000.0, 29999.0}) {
    CHECK(std::abs(bessel_j0(u) - std::cyl_bessel_j(0.0, u)) <= 1e-12);
  }
}

TEST_CASE("untruncated limit recovers the power law") {
  // large cutoff: psi_a -> sigma |xi|^alpha
  const auto sym = LevySymbol::truncated(1.5, 2.0, 1e6);
  const double got = symbol_eval_radial(sym, 2.0, 2);
  CHECK(got == doctest::Approx(2.0 * std::pow(2.0, 1.5)).epsilon(1e-6));
}

TEST_CASE("positive stable subordinator has the right Laplace transform") {
  const double ap = 0.75;  // alpha = 1.5
  const int m = 200000;
  for (double lambda : {0.5, 1.0, 2.0}) {
    RunningStat stat;
    for (int i = 0; i < m; ++i) {
      CounterRng rng(7, std::uint64_t(i), 0);
      stat.add(std::exp(-lambda * sample_positive_stable(ap, rng)));
    }
    const double expect = std::exp(-std::pow(lambda, ap));
    CHECK(std::abs(stat.mean() - expect) <= 4.0 * stat.stderr_() + 1e-12);
  }
}

TEST_CASE("increment characteristic function matches the symbol") {
  const double dt = 0.1;
  IncrementSampler s{LevySymbol::isotropic(1.5, 1.0), 2, SamplingScheme::exact_stable, 0.0, 42};
  s.validate();
  const auto samples = draw_increments(s, dt, 100000);
  for (double m : {0.5, 1.0, 2.0, 4.0}) {
    const Eigen::Vector2d xi(m, 0.0);
    const auto est = empirical_cf(samples, xi);
    const double expect = std::exp(-dt * std::pow(m, 1.5));
    CHECK(std::abs(est.mean.real() - expect) <= 3.0 * est.stderr_re);
    CHECK(std::abs(est.mean.imag()) <= 3.0 * est.stderr_im + 1e-12);
  }
}

TEST_CASE("1-d sampler (Chambers-Mallows-Stuck) matches the symbol") {
  const double dt = 0.2;
  IncrementSampler s{LevySymbol::isotropic(1.5, 1.0), 1, SamplingScheme::exact_stable, 0.0, 11};
  const auto samples = draw_increments(s, dt, 100000);
  const auto est = empirical_cf(samples, Eigen::VectorXd::Ones(1));
  CHECK(std::abs(est.mean.real() - std::exp(-0.2)) <= 3.0 * est.stderr_re);
}

TEST_CASE("zero duration gives the zero increment") {
  IncrementSampler s{LevySymbol::isotropic(1.2, 1.0), 2, SamplingScheme::exact_stable, 0.0, 1};
  CHECK(sample_increment(s, 0.0, 5).norm() == 0.0);
  CHECK_THROWS_AS(sample_increment(s, -0.1, 5), std::invalid_argument);
}

TEST_CASE("self-similarity: summed increments match the doubled duration") {
  const double dt = 0.15;
  IncrementSampler s{LevySymbol::isotropic(1.5, 1.0), 1, SamplingScheme::exact_stable, 0.0, 3};
  const int m = 100000;
  std::vector<double> lhs, rhs;
  lhs.reserve(m);
  rhs.reserve(m);
  for (int i = 0; i < m; ++i) {
    lhs.push_back(sample_increment(s, 2.0 * dt, std::uint64_t(i), 0)[0]);
    rhs.push_back(sample_increment(s, dt, std::uint64_t(i), 1)[0] +
                  sample_increment(s, dt, std::uint64_t(i), 2)[0]);
  }
  const double d = oracles::ks_statistic(lhs, rhs);
  CHECK(d <= oracles::ks_critical_01(lhs.size(), rhs.size()));
}

TEST_CASE("pooled stationarity: n concatenated steps reproduce one long step") {
  const double dt = 0.05;
  const int n = 4, m = 60000;
  IncrementSampler s{LevySymbol::isotropic(1.3, 1.0), 1, SamplingScheme::exact_stable, 0.0, 9};
  std::vector<double> pooled, direct;
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += sample_increment(s, dt, std::uint64_t(i), 10 + j)[0];
    pooled.push_back(acc);
    direct.push_back(sample_increment(s, n * dt, std::uint64_t(i), 0)[0]);
  }
  CHECK(oracles::ks_statistic(pooled, direct) <=
        oracles::ks_critical_01(pooled.size(), direct.size()));
}

TEST_CASE("increments are symmetric: sample mean near zero") {
  IncrementSampler s{LevySymbol::isotropic(1.5, 1.0), 2, SamplingScheme::exact_stable, 0.0, 21};
  const int m = 100000;
  RunningStat sx, sy;
  for (int i = 0; i < m; ++i) {
    const auto v = sample_increment(s, 0.1, std::uint64_t(i));
    sx.add(v[0]);
    sy.add(v[1]);
  }
  CHECK(std::abs(sx.mean()) <= 4.0 * std::sqrt(sx.variance() / m));
  CHECK(std::abs(sy.mean()) <= 4.0 * std::sqrt(sy.variance() / m));
}

TEST_CASE("compound-Poisson scheme agrees with the exact sampler in law") {
  const double dt = 0.1;
  IncrementSampler cp{LevySymbol::isotropic(1.5, 1.0), 2,
                      SamplingScheme::compound_poisson_gaussian, 0.0, 77};
  const auto samples = draw_increments(cp, dt, 100000);
  for (double m : {0.5, 1.0, 2.0}) {
    const auto est = empirical_cf(samples, Eigen::Vector2d(m, 0.0));
    const double expect = std::exp(-dt * std::pow(m, 1.5));
    // 3 sigma plus a small allowance for the Gaussian small-jump surrogate
    CHECK(std::abs(est.mean.real() - expect) <= 3.0 * est.stderr_re + 2e-3);
  }
}

TEST_CASE("truncated sampler matches its quadrature symbol") {
  const double dt = 0.2;
  const auto sym = LevySymbol::truncated(1.5, 1.0, 1.0);
  IncrementSampler s{sym, 1, SamplingScheme::compound_poisson_gaussian, 0.0, 5};
  const auto samples = draw_increments(s, dt, 100000);
  for (double m : {1.0, 3.0}) {
    const auto est = empirical_cf(samples, Eigen::VectorXd::Constant(1, m));
    const double expect = std::exp(-dt * symbol_eval_radial(sym, m, 1));
    CHECK(std::abs(est.mean.real() - expect) <= 3.0 * est.stderr_re + 2e-3);
  }
}

TEST_CASE("empirical_cf degenerate cases") {
  std::vector<Eigen::VectorXd> zeros(3, Eigen::VectorXd::Zero(2));
  const auto est = empirical_cf(zeros, Eigen::Vector2d(1.3, -0.4));
  CHECK(est.mean.real() == 1.0);
  CHECK(est.mean.imag() == 0.0);
  CHECK(est.stderr_re == 0.0);
  CHECK(est.stderr_im == 0.0);

  IncrementSampler s{LevySymbol::isotropic(1.5, 1.0), 2, SamplingScheme::exact_stable, 0.0, 2};
  const auto samples = draw_increments(s, 0.3, 100);
  const auto at0 = empirical_cf(samples, Eigen::Vector2d(0, 0));
  CHECK(at0.mean.real() == 1.0);
  CHECK(at0.mean.imag() == 0.0);

  std::vector<Eigen::VectorXd> empty;
  CHECK_THROWS_AS(empirical_cf(empty, Eigen::Vector2d(1, 0)), std::invalid_argument);
}

TEST_CASE("symbol condition report") {
  std::vector<double> wide;
  for (int i = 0; i <= 20; ++i) wide.push_back(std::pow(10.0, 0.1 * i));  // [1, 100]
  const auto iso = check_symbol_condition(LevySymbol::isotropic(1.5, 1.0), 2, wide);
  CHECK(iso.pass);
  CHECK(iso.asymptotic_regime);
  CHECK(iso.ratio_min == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(iso.ratio_max == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> high;
  for (int i = 0; i <= 20; ++i) high.push_back(10.0 * std::pow(10.0, 0.1 * i));  // [10, 1000]
  const auto trunc = check_symbol_condition(LevySymbol::truncated(1.5, 1.0, 1.0), 2, high);
  CHECK(trunc.pass);
  CHECK(trunc.asymptotic_regime);
  CHECK(trunc.ratio_min >= 0.5);
  CHECK(trunc.ratio_max <= 2.0);

  std::vector<double> low{0.01, 0.02, 0.05, 0.1};
  const auto drift = check_symbol_condition(LevySymbol::truncated(1.5, 1.0, 1.0), 2, low);
  CHECK_FALSE(drift.asymptotic_regime);
}

TEST_CASE("sampler validation") {
  IncrementSampler bad{LevySymbol::truncated(1.5, 1.0, 1.0), 2, SamplingScheme::exact_stable,
                       0.0, 0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(LevySymbol::isotropic(2.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(LevySymbol::isotropic(1.5, -1.0), std::invalid_argument);
}

TEST_CASE("sampling is a pure function of (stream, sample, step)") {
  IncrementSampler s{LevySymbol::isotropic(1.7, 1.0), 2, SamplingScheme::exact_stable, 0.0, 99};
  const auto a = sample_increment(s, 0.3, 12, 34);
  const auto b = sample_increment(s, 0.3, 12, 34);
  CHECK(a == b);
  const auto c = sample_increment(s, 0.3, 12, 35);
  CHECK(a != c);
}

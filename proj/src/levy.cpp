#include "fnse/levy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace fnse {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

double bessel_j0(double u) {
  u = std::abs(u);
  if (u < 50.0) return std::cyl_bessel_j(0.0, u);
  // Hankel asymptotic expansion; truncation error below 1e-13 for u >= 50.
  // std::cyl_bessel_j costs microseconds, which dominates the oscillatory
  // quadrature of truncated symbols at high frequency.
  const double z2 = 1.0 / (u * u);
  const double p = 1.0 + z2 * (-9.0 / 128.0 +
                               z2 * (3675.0 / 32768.0 + z2 * (-2401245.0 / 4194304.0)));
  const double q = (1.0 / u) * (-1.0 / 8.0 +
                                z2 * (75.0 / 1024.0 + z2 * (-59535.0 / 262144.0)));
  const double w = u - 0.25 * kPi;
  return std::sqrt(2.0 / (kPi * u)) * (p * std::cos(w) - q * std::sin(w));
}

namespace {

// Spherical average of cos(u e.w) over w in S^{d-1}.
double sphere_avg_cos(int dim, double u) {
  switch (dim) {
    case 1:
      return std::cos(u);
    case 2:
      return bessel_j0(u);
    case 3:
      return std::abs(u) < 1e-8 ? 1.0 - u * u / 6.0 : std::sin(u) / u;
    default:
      throw std::invalid_argument("levy: dim must be 1, 2 or 3");
  }
}

// 1 - sphere_avg_cos, evaluated stably near u = 0.
double one_minus_avg_cos(int dim, double u) {
  const double au = std::abs(u);
  if (dim == 1) {
    const double s = std::sin(0.5 * u);
    return 2.0 * s * s;
  }
  if (au < 1e-4) {
    // series 1 - A_d(u) = u^2/(2d) - gamma_d u^4 + O(u^6)
    const double g = dim == 2 ? 1.0 / 64.0 : 1.0 / 120.0;
    return u * u / (2.0 * dim) - g * u * u * u * u;
  }
  return 1.0 - sphere_avg_cos(dim, u);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double h = b - a;
  const double coarse = h / 6.0 * (fa + 4.0 * fm + fb);
  const double left = h / 12.0 * (fa + 4.0 * flm + fm);
  const double right = h / 12.0 * (fm + 4.0 * frm + fb);
  const double fine = left + right;
  if (depth <= 0 || std::abs(fine - coarse) < 15.0 * tol) {
    return fine + (fine - coarse) / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 40);
}

// int_0^x (1 - A_d(u)) u^{-1-alpha} du for x <= 1, by the alternating series
// of 1 - A_d integrated term by term; converges to machine precision.
double profile_series(int dim, double alpha, double x) {
  double term_coef = 1.0;  // |coefficient| of u^{2k} in 1 - A_d
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 24; ++k) {
    switch (dim) {
      case 1: term_coef /= double(2 * k - 1) * double(2 * k); break;      // 1/(2k)!
      case 2: term_coef /= 4.0 * double(k) * double(k); break;            // 1/(4^k k!^2)
      default: term_coef /= double(2 * k) * double(2 * k + 1); break;     // 1/(2k+1)!
    }
    const double term = sign * term_coef * std::pow(x, 2.0 * k - alpha) / (2.0 * k - alpha);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    sign = -sign;
  }
  return sum;
}

// F_d(x) = int_0^x (1 - A_d(u)) u^{-1-alpha} du.
// Absolute tolerance ~1e-12 for x <= 3e4; beyond that the tail uses the
// closed form with an oscillatory remainder bounded by x^{-alpha-1/2}.
double truncated_profile(int dim, double alpha, double x) {
  if (x <= 0.0) return 0.0;
  if (x <= 1.0) return profile_series(dim, alpha, x);
  const double head = profile_series(dim, alpha, 1.0);
  const double cap = 3e4;
  const double hi = std::min(x, cap);
  auto f = [&](double u) { return one_minus_avg_cos(dim, u) * std::pow(u, -1.0 - alpha); };
  const double body = integrate(f, 1.0, hi, 1e-13);
  double tail = 0.0;
  if (x > cap) {
    tail = (std::pow(cap, -alpha) - std::pow(x, -alpha)) / alpha;
  }
  return head + body + tail;
}

}  // namespace

LevySymbol LevySymbol::isotropic(double alpha, double sigma) {
  LevySymbol s{alpha, sigma, SymbolKind::isotropic_stable, 1.0};
  s.validate();
  return s;
}

LevySymbol LevySymbol::truncated(double alpha, double sigma, double a) {
  LevySymbol s{alpha, sigma, SymbolKind::truncated_stable, a};
  s.validate();
  return s;
}

void LevySymbol::validate() const {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw std::invalid_argument("LevySymbol: alpha must lie in (0,2)");
  if (!(sigma > 0.0)) throw std::invalid_argument("LevySymbol: sigma must be positive");
  if (kind == SymbolKind::truncated_stable && !(truncation_a > 0.0))
    throw std::invalid_argument("LevySymbol: truncation radius must be positive");
}

double stable_density_constant(int dim, double alpha) {
  return alpha * std::pow(2.0, alpha - 1.0) * std::tgamma(0.5 * (dim + alpha)) /
         (std::pow(kPi, 0.5 * dim) * std::tgamma(1.0 - 0.5 * alpha));
}

double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * kPi;
    case 3: return 4.0 * kPi;
    default: throw std::invalid_argument("levy: dim must be 1, 2 or 3");
  }
}

double symbol_eval_radial(const LevySymbol& symbol, double xi_norm, int dim) {
  symbol.validate();
  if (!std::isfinite(xi_norm)) throw std::invalid_argument("symbol_eval: non-finite frequency");
  const double r = std::abs(xi_norm);
  if (r == 0.0) return 0.0;
  if (symbol.kind == SymbolKind::isotropic_stable) {
    return symbol.sigma * std::pow(r, symbol.alpha);
  }
  const double s = sphere_area(dim) * stable_density_constant(dim, symbol.alpha);
  return symbol.sigma * s * std::pow(r, symbol.alpha) *
         truncated_profile(dim, symbol.alpha, r * symbol.truncation_a);
}

std::complex<double> symbol_eval(const LevySymbol& symbol, const Eigen::VectorXd& xi) {
  if (!xi.allFinite()) throw std::invalid_argument("symbol_eval: non-finite frequency");
  return {symbol_eval_radial(symbol, xi.norm(), int(xi.size())), 0.0};
}

double jump_intensity(const LevySymbol& symbol, int dim, double lo, double hi) {
  if (!(lo > 0.0) || hi <= lo) return 0.0;
  const double c = symbol.sigma * stable_density_constant(dim, symbol.alpha) * sphere_area(dim);
  const double upper = std::isinf(hi) ? 0.0 : std::pow(hi, -symbol.alpha);
  return c * (std::pow(lo, -symbol.alpha) - upper) / symbol.alpha;
}

double small_jump_variance_rate(const LevySymbol& symbol, int dim, double cutoff) {
  if (!(cutoff > 0.0)) return 0.0;
  const double c = symbol.sigma * stable_density_constant(dim, symbol.alpha) * sphere_area(dim);
  return c * std::pow(cutoff, 2.0 - symbol.alpha) / ((2.0 - symbol.alpha) * dim);
}

void IncrementSampler::validate() const {
  symbol.validate();
  if (dim < 1 || dim > 3) throw std::invalid_argument("IncrementSampler: dim must be 1, 2 or 3");
  if (scheme == SamplingScheme::exact_stable && symbol.kind != SymbolKind::isotropic_stable)
    throw std::invalid_argument(
        "IncrementSampler: exact-stable scheme requires an isotropic-stable symbol");
}

double sample_positive_stable(double alpha_prime, CounterRng& rng) {
  const double u = kPi * rng.uniform();
  const double e = rng.exponential();
  const double ap = alpha_prime;
  return std::sin(ap * u) * std::pow(std::sin((1.0 - ap) * u), (1.0 - ap) / ap) /
         (std::pow(std::sin(u), 1.0 / ap) * std::pow(e, (1.0 - ap) / ap));
}

double sample_symmetric_stable_1d(double alpha, CounterRng& rng) {
  const double v = kPi * (rng.uniform() - 0.5);
  const double e = rng.exponential();
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos((alpha - 1.0) * v) / e, (1.0 - alpha) / alpha);
}

namespace {

void unit_direction(int dim, CounterRng& rng, double* out) {
  switch (dim) {
    case 1:
      out[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
      return;
    case 2: {
      const double th = 2.0 * kPi * rng.uniform();
      out[0] = std::cos(th);
      out[1] = std::sin(th);
      return;
    }
    default: {
      const double z = 2.0 * rng.uniform() - 1.0;
      const double th = 2.0 * kPi * rng.uniform();
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      out[0] = rho * std::cos(th);
      out[1] = rho * std::sin(th);
      out[2] = z;
      return;
    }
  }
}

void gaussian_vector(int dim, double std_dev, CounterRng& rng, double* out) {
  double z0, z1;
  rng.gaussian_pair(z0, z1);
  out[0] = std_dev * z0;
  if (dim >= 2) out[1] = std_dev * z1;
  if (dim == 3) {
    double z2, z3;
    rng.gaussian_pair(z2, z3);
    out[2] = std_dev * z2;
  }
}

}  // namespace

void sample_increment(const IncrementSampler& sampler, double dt,
                      std::uint64_t sample_key, std::uint32_t step, double* out) {
  if (dt < 0.0) throw std::invalid_argument("sample_increment: negative duration");
  const int d = sampler.dim;
  for (int i = 0; i < d; ++i) out[i] = 0.0;
  if (dt == 0.0) return;

  CounterRng rng(sampler.rng_stream, sample_key, step);
  const double alpha = sampler.symbol.alpha;

  if (sampler.scheme == SamplingScheme::exact_stable) {
    const double scale = std::pow(dt * sampler.symbol.sigma, 1.0 / alpha);
    if (d == 1) {
      out[0] = scale * sample_symmetric_stable_1d(alpha, rng);
      return;
    }
    const double s = sample_positive_stable(0.5 * alpha, rng);
    double g[3];
    gaussian_vector(d, 1.0, rng, g);
    const double r = scale * std::sqrt(2.0 * s);
    for (int i = 0; i < d; ++i) out[i] = r * g[i];
    return;
  }

  // compound Poisson above the cutoff, variance-matched Gaussian below
  double cutoff = sampler.small_jump_cutoff > 0.0 ? sampler.small_jump_cutoff
                                                  : std::pow(dt, 1.0 / alpha) / 10.0;
  const bool truncated = sampler.symbol.kind == SymbolKind::truncated_stable;
  const double a = truncated ? sampler.symbol.truncation_a
                             : std::numeric_limits<double>::infinity();
  if (cutoff > a) cutoff = a;

  const double lambda = jump_intensity(sampler.symbol, d, cutoff, a);
  const long n_jumps = rng.poisson(lambda * dt);
  const double lo = std::pow(cutoff, -alpha);
  const double hi = std::isinf(a) ? 0.0 : std::pow(a, -alpha);
  for (long j = 0; j < n_jumps; ++j) {
    const double u = rng.uniform();
    const double radius = std::pow(lo - u * (lo - hi), -1.0 / alpha);
    double dir[3];
    unit_direction(d, rng, dir);
    for (int i = 0; i < d; ++i) out[i] += radius * dir[i];
  }

  const double std_dev = std::sqrt(dt * small_jump_variance_rate(sampler.symbol, d, cutoff));
  double g[3];
  gaussian_vector(d, std_dev, rng, g);
  for (int i = 0; i < d; ++i) out[i] += g[i];
}

Eigen::VectorXd sample_increment(const IncrementSampler& sampler, double dt,
                                 std::uint64_t sample_key, std::uint32_t step) {
  Eigen::VectorXd out(sampler.dim);
  sample_increment(sampler, dt, sample_key, step, out.data());
  return out;
}

ComplexMcEstimate empirical_cf(std::span<const Eigen::VectorXd> samples,
                               const Eigen::VectorXd& xi) {
  if (samples.empty()) throw std::invalid_argument("empirical_cf: empty sample list");
  RunningStat re, im;
  for (const auto& x : samples) {
    const double phase = xi.dot(x);
    re.add(std::cos(phase));
    im.add(std::sin(phase));
  }
  ComplexMcEstimate est;
  est.mean = {re.mean(), im.mean()};
  est.stderr_re = re.stderr_();
  est.stderr_im = im.stderr_();
  est.n = samples.size();
  return est;
}

SymbolConditionReport check_symbol_condition(const LevySymbol& symbol, int dim,
                                             std::span<const double> xi_magnitudes,
                                             double ratio_bound) {
  if (xi_magnitudes.size() < 2)
    throw std::invalid_argument("check_symbol_condition: need at least two magnitudes");
  for (double m : xi_magnitudes)
    if (!(m > 0.0)) throw std::invalid_argument("check_symbol_condition: magnitudes must be > 0");
  const double lo_mag = *std::min_element(xi_magnitudes.begin(), xi_magnitudes.end());
  SymbolConditionReport rep;
  rep.ratio_min = std::numeric_limits<double>::infinity();
  rep.ratio_max = 0.0;
  for (double m : xi_magnitudes) {
    const double ratio = symbol_eval_radial(symbol, m, dim) / std::pow(m, symbol.alpha);
    rep.ratio_min = std::min(rep.ratio_min, ratio);
    rep.ratio_max = std::max(rep.ratio_max, ratio);
  }
  // the condition is asymptotic: below ~2pi/a the truncated symbol has not
  // entered its power-law regime yet
  rep.asymptotic_regime = symbol.kind == SymbolKind::isotropic_stable ||
                          lo_mag * symbol.truncation_a >= 2.0 * kPi;
  rep.pass = std::isfinite(rep.ratio_min) && std::isfinite(rep.ratio_max) &&
             rep.ratio_min > 0.0 && rep.ratio_max / rep.ratio_min <= ratio_bound;
  return rep;
}

}  // namespace fnse

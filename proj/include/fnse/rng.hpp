#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fnse {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every draw is a pure function of (key, counter), so ensembles keyed by
/// (stream, sample, step) give identical results under any execution order
/// or worker count.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
      const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
      const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

/// SplitMix64 finalizer, used to derive stream keys from (seed, purpose tags).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives a sub-stream id; chains as derive_stream(derive_stream(seed, a), b).
inline std::uint64_t derive_stream(std::uint64_t stream, std::uint64_t tag) {
  return mix64(stream ^ mix64(tag));
}

/// One (stream, sample, step) cell of the counter space.
///
/// The 128-bit Philox counter is laid out as (draw, step, sample_lo, sample_hi);
/// the 64-bit stream id forms the key. Successive calls advance `draw` only,
/// so a cell provides 2^32 64-bit draws, far more than any step consumes.
class CounterRng {
 public:
  CounterRng(std::uint64_t stream, std::uint64_t sample_key, std::uint32_t step)
      : key_{std::uint32_t(stream), std::uint32_t(stream >> 32)},
        ctr_{0u, step, std::uint32_t(sample_key), std::uint32_t(sample_key >> 32)} {}

  std::uint64_t next_u64() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    const auto b = Philox4x32::block(ctr_, key_);
    ctr_[0] += 1;
    spare_ = (std::uint64_t(b[2]) << 32) | b[3];
    have_ = true;
    return (std::uint64_t(b[0]) << 32) | b[1];
  }

  /// Uniform on the open interval (0,1); never returns an endpoint.
  double uniform() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform()); }

  /// Box-Muller pair; always consumes exactly two uniforms.
  void gaussian_pair(double& z0, double& z1) {
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * M_PI * u2;
    z0 = r * std::cos(th);
    z1 = r * std::sin(th);
  }

  double gaussian() {
    double a, b;
    gaussian_pair(a, b);
    return a;
  }

  /// Poisson by inversion: one uniform, deterministic draw count.
  long poisson(double mean) {
    const double u = uniform();
    double p = std::exp(-mean), cdf = p;
    long k = 0;
    while (u > cdf && k < 100000000L) {
      ++k;
      p *= mean / double(k);
      cdf += p;
      if (p < 1e-300 && cdf < u) break;  // tail underflow guard
    }
    return k;
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::uint64_t spare_ = 0;
  bool have_ = false;
};

}  // namespace fnse

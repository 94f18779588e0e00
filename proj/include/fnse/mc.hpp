#pragma once

#include <cmath>
#include <complex>
#include <cstddef>

namespace fnse {

/// Monte Carlo mean with its standard error; every stochastic result carries one.
struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

struct ComplexMcEstimate {
  std::complex<double> mean{0.0, 0.0};
  double stderr_re = 0.0;
  double stderr_im = 0.0;
  std::size_t n = 0;

  double stderr_abs() const { return std::hypot(stderr_re, stderr_im); }
};

/// Streaming mean/variance accumulator (Welford).
class RunningStat {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / double(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }
  double stderr_() const { return n_ > 0 ? std::sqrt(variance() / double(n_)) : 0.0; }
  McEstimate estimate() const { return {mean_, stderr_(), n_}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace fnse

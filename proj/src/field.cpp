#include "fnse/field.hpp"

#include <complex>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

#include "fnse/spectral.hpp"

namespace fnse {

namespace {

// In-place unnormalized DFT along every axis of one component.
void dft_all_axes(const PeriodicGrid& grid, Eigen::VectorXcd& data) {
  Eigen::FFT<double> fft;
  const int n = grid.n;
  const Eigen::Index total = grid.num_nodes();
  const std::size_t ns = static_cast<std::size_t>(n);
  std::vector<std::complex<double>> line(ns), out(ns);
  for (int axis = grid.dim - 1; axis >= 0; --axis) {
    Eigen::Index stride = 1;
    for (int a = grid.dim - 1; a > axis; --a) stride *= n;
    const Eigen::Index block = stride * n;
    for (Eigen::Index base = 0; base < total; base += block) {
      for (Eigen::Index inner = 0; inner < stride; ++inner) {
        for (int j = 0; j < n; ++j) line[std::size_t(j)] = data[base + inner + j * stride];
        fft.fwd(out, line);
        for (int j = 0; j < n; ++j) data[base + inner + j * stride] = out[std::size_t(j)];
      }
    }
  }
}

}  // namespace

Eigen::MatrixXcd dft_forward(const PeriodicGrid& grid, const Eigen::MatrixXd& values) {
  const double scale = 1.0 / double(grid.num_nodes());
  Eigen::MatrixXcd coeffs(values.rows(), values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    Eigen::VectorXcd buf = values.col(c).cast<std::complex<double>>();
    dft_all_axes(grid, buf);
    coeffs.col(c) = buf * scale;
  }
  return coeffs;
}

Eigen::MatrixXcd dft_inverse(const PeriodicGrid& grid, const Eigen::MatrixXcd& coeffs) {
  // synthesis via conj(fwd(conj(.))): avoids backend-dependent scaling
  Eigen::MatrixXcd values(coeffs.rows(), coeffs.cols());
  for (Eigen::Index c = 0; c < coeffs.cols(); ++c) {
    Eigen::VectorXcd buf = coeffs.col(c).conjugate();
    dft_all_axes(grid, buf);
    values.col(c) = buf.conjugate();
  }
  return values;
}

PeriodicField::PeriodicField(const PeriodicGrid& grid, Eigen::MatrixXd values,
                             bool divergence_free)
    : grid_(grid), values_(std::move(values)), divergence_free_(divergence_free) {
  grid_.validate();
  if (values_.rows() != grid_.num_nodes())
    throw std::invalid_argument("PeriodicField: value rows do not match the grid");
  if (values_.cols() < 1) throw std::invalid_argument("PeriodicField: needs at least one component");
  if (!values_.allFinite()) throw std::invalid_argument("PeriodicField: non-finite values");
  coeffs_ = dft_forward(grid_, values_);
}

PeriodicField PeriodicField::zero(const PeriodicGrid& grid, int comps) {
  return PeriodicField(grid, Eigen::MatrixXd::Zero(grid.num_nodes(), comps), true);
}

PeriodicField PeriodicField::constant(const PeriodicGrid& grid, const Eigen::VectorXd& value) {
  Eigen::MatrixXd v(grid.num_nodes(), value.size());
  for (Eigen::Index c = 0; c < value.size(); ++c) v.col(c).setConstant(value[c]);
  return PeriodicField(grid, std::move(v), true);
}

PeriodicField PeriodicField::from_function(
    const PeriodicGrid& grid, int comps,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn) {
  Eigen::MatrixXd v(grid.num_nodes(), comps);
  for (Eigen::Index i = 0; i < grid.num_nodes(); ++i) {
    const Eigen::VectorXd val = fn(grid.node(i));
    if (val.size() != comps) throw std::invalid_argument("from_function: wrong component count");
    v.row(i) = val.transpose();
  }
  return PeriodicField(grid, std::move(v));
}

PeriodicField PeriodicField::from_coeffs(const PeriodicGrid& grid, const Eigen::MatrixXcd& coeffs,
                                         bool divergence_free) {
  const Eigen::MatrixXcd synth = dft_inverse(grid, coeffs);
  return PeriodicField(grid, synth.real(), divergence_free);
}

FieldHistory::FieldHistory(std::vector<double> times, std::vector<PeriodicField> slices,
                           bool require_divergence_free, bool with_gradients)
    : times_(std::move(times)), slices_(std::move(slices)) {
  if (times_.size() < 2 || times_.size() != slices_.size())
    throw std::invalid_argument("FieldHistory: need matching times/slices, at least two");
  if (times_.front() != 0.0) throw std::invalid_argument("FieldHistory: first slice time must be 0");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] < times_[i - 1]))
      throw std::invalid_argument("FieldHistory: slice times must be strictly decreasing");
  for (const auto& s : slices_) {
    if (s.grid() != slices_.front().grid() || s.comps() != slices_.front().comps())
      throw std::invalid_argument("FieldHistory: slices must share one grid and component count");
  }
  if (require_divergence_free) {
    for (auto& s : slices_) {
      const double scale = std::max(s.max_abs(), 1e-300);
      if (max_divergence(s) > 1e-10 * scale)
        throw std::invalid_argument("FieldHistory: slice is not divergence-free");
      s.set_divergence_free(true);
    }
  }
  if (with_gradients) {
    gradients_.reserve(slices_.size());
    for (const auto& s : slices_) gradients_.push_back(spectral_gradient(s));
  }
}

FieldHistory FieldHistory::frozen(const PeriodicField& slice, double t_end,
                                  bool require_divergence_free, bool with_gradients) {
  if (!(t_end < 0.0)) throw std::invalid_argument("FieldHistory::frozen: t_end must be negative");
  return FieldHistory({0.0, t_end}, {slice, slice}, require_divergence_free, with_gradients);
}

const PeriodicField& FieldHistory::gradient_slice(int i) const {
  if (gradients_.empty())
    throw std::logic_error("FieldHistory: gradients were not requested at construction");
  return gradients_[std::size_t(i)];
}

void FieldHistory::locate(double t, int& index, double& theta) const {
  const double t_end = times_.back();
  if (t > 1e-12 || t < t_end - 1e-12)
    throw std::invalid_argument("FieldHistory: time outside the covered interval");
  t = std::min(0.0, std::max(t_end, t));
  int lo = 0, hi = int(times_.size()) - 1;
  // descending times: find lo with times[lo+1] <= t <= times[lo]
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (t <= times_[std::size_t(mid)]) lo = mid; else hi = mid;
  }
  index = lo;
  const double t0 = times_[std::size_t(lo)], t1 = times_[std::size_t(lo) + 1];
  theta = (t0 - t) / (t0 - t1);
}

Eigen::MatrixXd FieldHistory::values_at(double t) const {
  int i;
  double theta;
  locate(t, i, theta);
  return (1.0 - theta) * slices_[std::size_t(i)].values() +
         theta * slices_[std::size_t(i) + 1].values();
}

}  // namespace fnse

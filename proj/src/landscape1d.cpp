#include "equisampler/landscape1d.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace eqs {

namespace {

constexpr std::size_t kNormPanels = 1 << 17;  // >= 1e5, power of two

void write_full_precision(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

}  // namespace

const std::array<double, 20>& FourierLandscape::benchmark_coefficients() {
  static const std::array<double, 20> c = {
      0.21, 1.25, 0.61, 0.25, 0.13, 0.10, 1.16, 0.18, 0.12, 0.23,
      0.21, 0.19, 0.37, 0.99, 0.36, 0.02, 0.06, 0.08, 0.09, 0.04};
  return c;
}

FourierLandscape::FourierLandscape()
    : FourierLandscape(std::vector<double>(benchmark_coefficients().begin(),
                                           benchmark_coefficients().end()),
                       10.0) {}

FourierLandscape::FourierLandscape(std::vector<double> coefficients, double period)
    : coefficients_(std::move(coefficients)), period_(period), norm_(0.0) {
  if (coefficients_.empty())
    throw std::invalid_argument("FourierLandscape: empty coefficient list");
  if (!(period_ > 0.0))
    throw std::invalid_argument("FourierLandscape: period must be positive");
  norm_ = simpson(0.0, period_, kNormPanels, [this](double x) { return std::exp(-h(x)); });
}

double FourierLandscape::h(double x) const {
  // sin(k w x), cos(k w x) by the angle-addition recurrence over harmonics.
  const double w = 2.0 * std::numbers::pi / period_;
  const double c1 = std::cos(w * x);
  const double s1 = std::sin(w * x);
  double ck = c1, sk = s1, sum = 0.0;
  for (double c : coefficients_) {
    sum += c * sk;
    const double cn = ck * c1 - sk * s1;
    sk = sk * c1 + ck * s1;
    ck = cn;
  }
  return 2.0 * sum;
}

double FourierLandscape::dh(double x) const {
  const double w = 2.0 * std::numbers::pi / period_;
  const double c1 = std::cos(w * x);
  const double s1 = std::sin(w * x);
  double ck = c1, sk = s1, sum = 0.0;
  double kw = w;
  for (double c : coefficients_) {
    sum += c * kw * ck;
    const double cn = ck * c1 - sk * s1;
    sk = sk * c1 + ck * s1;
    ck = cn;
    kw += w;
  }
  return 2.0 * sum;
}

double FourierLandscape::energy_and_gradient(std::span<const double> s,
                                             std::span<double> g) const {
  const double x = s[0];
  const double w = 2.0 * std::numbers::pi / period_;
  const double c1 = std::cos(w * x);
  const double s1 = std::sin(w * x);
  double ck = c1, sk = s1, e = 0.0, d = 0.0;
  double kw = w;
  for (double c : coefficients_) {
    e += c * sk;
    d += c * kw * ck;
    const double cn = ck * c1 - sk * s1;
    sk = sk * c1 + ck * s1;
    ck = cn;
    kw += w;
  }
  g[0] = 2.0 * d;
  return 2.0 * e;
}

double FourierLandscape::density(double x) const { return std::exp(-h(x)) / norm_; }

DensityGrid DensityGrid::analytic(const FourierLandscape& f, std::size_t n_bins) {
  if (n_bins < 2) throw std::invalid_argument("DensityGrid::analytic: need at least 2 bins");
  DensityGrid grid;
  grid.lo = 0.0;
  grid.hi = f.period_length();
  grid.values.resize(n_bins);
  const double width = grid.bin_width();
  const double n = f.normalization();
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double a = grid.lo + width * static_cast<double>(b);
    const double mass =
        simpson(a, a + width, 256, [&f](double x) { return std::exp(-f.h(x)); });
    grid.values[b] = mass / (n * width);
  }
  return grid;
}

DensityGrid DensityGrid::histogram(std::span<const double> samples, std::size_t n_bins,
                                   double lo, double hi) {
  if (n_bins < 2) throw std::invalid_argument("DensityGrid::histogram: need at least 2 bins");
  if (!(hi > lo)) throw std::invalid_argument("DensityGrid::histogram: empty domain");
  DensityGrid grid;
  grid.lo = lo;
  grid.hi = hi;
  grid.values.assign(n_bins, 0.0);
  if (samples.empty()) {
    grid.normalized = false;
    return grid;
  }
  const double width = grid.bin_width();
  for (double x : samples) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    if (b >= n_bins) b = n_bins - 1;
    grid.values[b] += 1.0;
  }
  const double mass = static_cast<double>(samples.size()) * width;
  for (double& v : grid.values) v /= mass;
  return grid;
}

void DensityGrid::write_csv(std::ostream& out) const {
  out << "bin_left,bin_right,value\n";
  const double width = bin_width();
  for (std::size_t b = 0; b < values.size(); ++b) {
    write_full_precision(out, lo + width * static_cast<double>(b));
    out << ',';
    write_full_precision(out, lo + width * static_cast<double>(b + 1));
    out << ',';
    write_full_precision(out, values[b]);
    out << '\n';
  }
}

double delta_f(const DensityGrid& a, const DensityGrid& b) {
  if (a.bins() != b.bins() || a.lo != b.lo || a.hi != b.hi)
    throw std::invalid_argument("delta_f: grids have different binnings");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.bins(); ++i) sum += std::abs(a.values[i] - b.values[i]);
  return sum / static_cast<double>(a.bins());
}

}  // namespace eqs

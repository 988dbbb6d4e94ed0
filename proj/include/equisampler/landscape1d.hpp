#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "equisampler/energy.hpp"

namespace eqs {

// Rough periodic benchmark energy: h(x) = 2 * sum_i c_i sin(i 2 pi x / L).
class FourierLandscape final : public EnergyFunction {
 public:
  // Coefficient set of the standard 20-harmonic benchmark landscape.
  static const std::array<double, 20>& benchmark_coefficients();

  // Benchmark landscape on [0, 10).
  FourierLandscape();
  FourierLandscape(std::vector<double> coefficients, double period);

  double h(double x) const;
  double dh(double x) const;

  // N = integral of exp(-h) over one period (composite Simpson, cached).
  double normalization() const { return norm_; }
  // f(x) = exp(-h(x)) / N
  double density(double x) const;

  double period_length() const { return period_; }
  std::span<const double> coefficients() const { return coefficients_; }

  // EnergyFunction
  std::size_t dimension() const override { return 1; }
  double energy(std::span<const double> s) const override { return h(s[0]); }
  void gradient(std::span<const double> s, std::span<double> g) const override {
    g[0] = dh(s[0]);
  }
  double energy_and_gradient(std::span<const double> s,
                             std::span<double> g) const override;
  std::optional<double> period() const override { return period_; }

 private:
  std::vector<double> coefficients_;
  double period_;
  double norm_;
};

// Piecewise-constant density on a uniform binning of [lo, hi].
struct DensityGrid {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> values;
  bool normalized = true;  // false only for a histogram with zero samples

  std::size_t bins() const { return values.size(); }
  double bin_width() const { return (hi - lo) / static_cast<double>(values.size()); }

  // Bin-averaged analytic density of the landscape over one period, n_bins >= 2.
  static DensityGrid analytic(const FourierLandscape& f, std::size_t n_bins);

  // Normalized histogram; samples must already lie in [lo, hi).
  static DensityGrid histogram(std::span<const double> samples, std::size_t n_bins,
                               double lo, double hi);

  // CSV rows "bin_left,bin_right,value" at full double precision.
  void write_csv(std::ostream& out) const;
};

// Mean absolute per-bin difference between two grids with identical binning.
// Throws std::invalid_argument when the binnings differ.
double delta_f(const DensityGrid& a, const DensityGrid& b);

// Composite Simpson rule with an even number of panels.
template <typename F>
double simpson(double a, double b, std::size_t panels, F&& f) {
  if (panels < 2) panels = 2;
  if (panels % 2 != 0) ++panels;
  const double h = (b - a) / static_cast<double>(panels);
  double odd = 0.0, even = 0.0;
  for (std::size_t k = 1; k < panels; k += 2) odd += f(a + h * static_cast<double>(k));
  for (std::size_t k = 2; k < panels; k += 2) even += f(a + h * static_cast<double>(k));
  return (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0;
}

}  // namespace eqs

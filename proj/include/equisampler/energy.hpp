#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace eqs {

// Differentiable scalar energy over a state space: either R^d or a
// d-dimensional box with the same period in every coordinate.
class EnergyFunction {
 public:
  virtual ~EnergyFunction() = default;

  virtual std::size_t dimension() const = 0;
  virtual double energy(std::span<const double> state) const = 0;
  virtual void gradient(std::span<const double> state, std::span<double> grad) const = 0;

  // Fused evaluation; overridden where one pass is cheaper than two.
  virtual double energy_and_gradient(std::span<const double> state,
                                     std::span<double> grad) const {
    gradient(state, grad);
    return energy(state);
  }

  // Coordinate period for periodic domains, nullopt for unbounded ones.
  virtual std::optional<double> period() const { return std::nullopt; }
};

}  // namespace eqs

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "equisampler/energy.hpp"
#include "equisampler/rng.hpp"

namespace eqs {

// Strictly increasing, positive temperatures T_0 < ... < T_K.
class TemperatureLadder {
 public:
  explicit TemperatureLadder(std::vector<double> temperatures);

  std::size_t chain_count() const { return temperatures_.size(); }
  double operator[](std::size_t i) const { return temperatures_[i]; }
  std::span<const double> values() const { return temperatures_; }

 private:
  std::vector<double> temperatures_;
};

// Strictly increasing energy levels H_0 < ... < H_{K+1} delimiting the rings.
// Ring j >= 1 is [H_j, H_{j+1}); ring 0 absorbs everything below H_1 and the
// top ring K absorbs everything at or above H_K, so every finite energy maps
// to a valid ring.
class EnergyLadder {
 public:
  explicit EnergyLadder(std::vector<double> levels);

  std::size_t chain_count() const { return levels_.size() - 1; }  // K + 1
  std::size_t ring_count() const { return levels_.size() - 1; }   // rings 0..K
  double level(std::size_t i) const { return levels_[i]; }
  std::span<const double> levels() const { return levels_; }

  std::size_t ring_index(double energy) const;

 private:
  std::vector<double> levels_;
};

// Geometric-increment ladder: K+2 levels from h0 to h_top whose consecutive
// increments grow by exactly lambda, endpoints hit exactly.
EnergyLadder build_ladder_geometric_increments(double h0, double h_top, std::size_t k,
                                               double lambda);

// Ladder whose offsets from h0 halve toward the bottom:
// H_j = h0 + (h_top - h0) * 2^(j - K - 1). The plain geometric construction
// used as the baseline for ladder comparisons.
EnergyLadder build_ladder_geometric_offsets(double h0, double h_top, std::size_t k);

// Bounded per-ring sample reservoirs for chains 1..K. A full ring is refreshed
// by overwriting a uniformly random element.
class RingStore {
 public:
  struct Entry {
    std::vector<double> state;
    double energy;
  };

  RingStore(EnergyLadder ladder, std::size_t cap);

  const EnergyLadder& ladder() const { return ladder_; }
  std::size_t cap() const { return cap_; }

  // chain must be in 1..K
  void insert(std::size_t chain, std::span<const double> state, double energy, Rng& rng);

  // Uniformly random element of ring `ring` of `chain`, nullptr when empty.
  // The pointer is valid until the next insert.
  const Entry* draw(std::size_t chain, std::size_t ring, Rng& rng) const;

  std::size_t ring_size(std::size_t chain, std::size_t ring) const;
  std::uint64_t insertions(std::size_t chain, std::size_t ring) const;

 private:
  struct Ring {
    std::vector<Entry> entries;
    std::uint64_t insertions = 0;
  };

  Ring& ring_at(std::size_t chain, std::size_t ring);
  const Ring& ring_at(std::size_t chain, std::size_t ring) const;

  EnergyLadder ladder_;
  std::size_t cap_;
  std::vector<Ring> rings_;  // (chain-1) * ring_count + ring
};

// One Monte Carlo chain: state, flattening floor, temperature, HMC step
// parameters with accept/reject bookkeeping. The cached energy is always the
// raw energy h(state).
struct Chain {
  std::size_t order = 0;
  double temperature = 1.0;
  // Raw energies below the floor are flattened: U(x) = max(h(x), floor).
  // -inf disables flattening (plain tempered target).
  double energy_floor = -std::numeric_limits<double>::infinity();
  std::vector<double> state;
  double energy = 0.0;
  double step_size = 0.1;
  int leapfrog_steps = 10;

  std::uint64_t hmc_attempts = 0;
  std::uint64_t hmc_accepts = 0;
  std::uint64_t ee_attempts = 0;
  std::uint64_t ee_accepts = 0;
  std::uint64_t ee_unavailable = 0;
  std::uint64_t pt_attempts = 0;
  std::uint64_t pt_accepts = 0;
  std::uint64_t nonfinite_rejects = 0;

  double flattened_energy(double raw) const {
    return raw > energy_floor ? raw : energy_floor;
  }
};

// log acceptance ratio of an equi-energy jump from x (current, chain i) to y
// (proposal drawn from chain i+1's ring matching x's energy).
double ee_log_accept(double h_x, double h_y, double floor_i, double floor_j, double t_i,
                     double t_j);

// log acceptance ratio of a replica swap between adjacent chains with raw
// energies h_i, h_j.
double pt_log_accept(double t_i, double t_j, double h_i, double h_j);

// Velocity-Verlet integration of (x, p) on U(x) = max(h(x), floor) for
// n_steps of size eps. Periodic coordinates are wrapped into [0, L).
// Returns the raw energy at the endpoint; finite == false when the energy or
// gradient turned non-finite (x, p are then unusable).
struct LeapfrogResult {
  bool finite = true;
  double raw_energy = 0.0;
};
LeapfrogResult leapfrog(const EnergyFunction& f, double floor, std::span<double> x,
                        std::span<double> p, double eps, int n_steps);

// One HMC update of the chain: fresh Gaussian momenta (variance T per
// coordinate), leapfrog trajectory, Metropolis test on the Hamiltonian change.
// Non-finite trajectories are rejected and counted.
bool hmc_step(Chain& chain, const EnergyFunction& f, Rng& rng);

struct TuneResult {
  double step_size = 0.0;
  double acceptance = 0.0;
  bool converged = false;
  int rounds = 0;
};

// Burn-in step size adaptation: rounds of `window` HMC steps, multiplying the
// step size by 1.1 (acceptance above the window) or dividing by 1.1 (below)
// until the trailing acceptance lands in [lo, hi] or max_rounds pass. The best
// step size seen is kept when adaptation does not converge.
TuneResult tune_step_size(Chain& chain, const EnergyFunction& f, Rng& rng, double lo = 0.4,
                          double hi = 0.5, int window = 200, int max_rounds = 100);

struct SamplerConfig {
  enum class Mode { EE, PT };
  Mode mode = Mode::EE;
  double p_ee = 0.15;
  double p_swap = 0.15;
  std::uint64_t burnin_sweeps = 0;
  std::uint64_t production_sweeps = 0;
  std::uint64_t seed = 0;
  bool tune = true;
  double tune_lo = 0.4;
  double tune_hi = 0.5;
  // EE mode only: activate chains top-down, each running burnin_sweeps before
  // the next lower chain joins, so every chain equilibrates against already
  // filled rings. Off: all chains burn in together.
  bool staggered_burnin = false;
};

// Called once per production sweep, after the moves of that sweep.
class SweepObserver {
 public:
  virtual ~SweepObserver() = default;
  virtual void on_production_sweep(std::uint64_t sweep, const Chain& cold,
                                   std::span<const Chain> chains) = 0;
};

struct ChainStats {
  std::size_t order = 0;
  double temperature = 0.0;
  double step_size = 0.0;
  double hmc_acceptance = 0.0;
  std::uint64_t hmc_attempts = 0;
  double ee_acceptance = 0.0;
  std::uint64_t ee_attempts = 0;
  std::uint64_t ee_unavailable = 0;
  double pt_acceptance = 0.0;
  std::uint64_t pt_attempts = 0;
  std::uint64_t nonfinite_rejects = 0;
  bool tune_converged = true;
  double tuned_acceptance = 0.0;
};

// Production-phase statistics of one run_sweeps call.
struct SweepReport {
  std::vector<ChainStats> chains;
  // Pooled over chains, production phase only.
  double mean_hmc_acceptance = 0.0;
  double mean_ee_acceptance = 0.0;
  double mean_pt_acceptance = 0.0;
  std::uint64_t ee_unavailable_total = 0;
  // Ring bookkeeping (EE mode): production-phase insertions per (chain, ring);
  // chain 0 is tracked for reporting parity even though it stores nothing.
  std::vector<std::vector<std::uint64_t>> ring_insertions;
  // Stored reservoir sizes at the end of the run (chains 1..K; row 0 zero).
  std::vector<std::vector<std::size_t>> ring_sizes;
  std::vector<std::string> warnings;
};

// Runs burn-in (per-chain step-size homing plus burnin_sweeps equilibration
// sweeps, staggered top-down in EE mode when requested) followed by
// production_sweeps sweeps. One sweep is one HMC step per active chain
// followed by the mode's interaction (EE jumps chain by chain, or one
// attempted swap of a random adjacent pair) and, in EE mode, insertion of
// every active chain's state into the ring store. `store` may be null in PT
// mode.
SweepReport run_sweeps(std::vector<Chain>& chains, RingStore* store,
                       const EnergyFunction& f, const SamplerConfig& config,
                       std::span<SweepObserver* const> observers);

}  // namespace eqs

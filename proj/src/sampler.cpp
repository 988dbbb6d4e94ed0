#include "equisampler/sampler.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace eqs {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double kinetic(std::span<const double> p) {
  double k = 0.0;
  for (double x : p) k += x * x;
  return 0.5 * k;
}

void wrap_into_period(std::span<double> x, double period) {
  for (double& c : x) {
    c -= period * std::floor(c / period);
    if (c >= period) c -= period;  // guard against floor rounding at the edge
  }
}

}  // namespace

TemperatureLadder::TemperatureLadder(std::vector<double> temperatures)
    : temperatures_(std::move(temperatures)) {
  if (temperatures_.empty())
    throw std::invalid_argument("TemperatureLadder: empty ladder");
  double prev = 0.0;
  for (double t : temperatures_) {
    if (!(t > prev))
      throw std::invalid_argument(
          "TemperatureLadder: temperatures must be positive and strictly increasing");
    prev = t;
  }
}

EnergyLadder::EnergyLadder(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.size() < 3)
    throw std::invalid_argument("EnergyLadder: need at least K+2 = 3 levels");
  for (std::size_t i = 1; i < levels_.size(); ++i)
    if (!(levels_[i] > levels_[i - 1]))
      throw std::invalid_argument("EnergyLadder: levels must be strictly increasing");
}

std::size_t EnergyLadder::ring_index(double energy) const {
  // Count interior levels H_1..H_K at or below the energy.
  const std::size_t k = levels_.size() - 2;
  std::size_t j = 0;
  while (j < k && energy >= levels_[j + 1]) ++j;
  return j;
}

EnergyLadder build_ladder_geometric_increments(double h0, double h_top, std::size_t k,
                                               double lambda) {
  if (!(h_top > h0))
    throw std::invalid_argument("ladder: top level must exceed the bottom level");
  if (!(lambda > 1.0)) throw std::invalid_argument("ladder: lambda must exceed 1");
  if (k < 1) throw std::invalid_argument("ladder: need at least one non-ground chain");
  const double span = h_top - h0;
  const double denom = std::pow(lambda, static_cast<double>(k + 1)) - 1.0;
  std::vector<double> levels(k + 2);
  levels[0] = h0;
  for (std::size_t i = 1; i <= k; ++i)
    levels[i] = h0 + span * (std::pow(lambda, static_cast<double>(i)) - 1.0) / denom;
  levels[k + 1] = h_top;
  return EnergyLadder(std::move(levels));
}

EnergyLadder build_ladder_geometric_offsets(double h0, double h_top, std::size_t k) {
  if (!(h_top > h0))
    throw std::invalid_argument("ladder: top level must exceed the bottom level");
  if (k < 1) throw std::invalid_argument("ladder: need at least one non-ground chain");
  const double span = h_top - h0;
  std::vector<double> levels(k + 2);
  levels[0] = h0;
  for (std::size_t i = 1; i <= k; ++i)
    levels[i] = h0 + span * std::pow(2.0, static_cast<double>(i) - static_cast<double>(k + 1));
  levels[k + 1] = h_top;
  return EnergyLadder(std::move(levels));
}

RingStore::RingStore(EnergyLadder ladder, std::size_t cap)
    : ladder_(std::move(ladder)), cap_(cap) {
  if (cap_ == 0) throw std::invalid_argument("RingStore: cap must be positive");
  rings_.resize((ladder_.chain_count() - 1) * ladder_.ring_count());
}

RingStore::Ring& RingStore::ring_at(std::size_t chain, std::size_t ring) {
  return rings_[(chain - 1) * ladder_.ring_count() + ring];
}

const RingStore::Ring& RingStore::ring_at(std::size_t chain, std::size_t ring) const {
  return rings_[(chain - 1) * ladder_.ring_count() + ring];
}

void RingStore::insert(std::size_t chain, std::span<const double> state, double energy,
                       Rng& rng) {
  if (chain < 1 || chain > ladder_.chain_count() - 1)
    throw std::invalid_argument("RingStore::insert: chain index out of range");
  Ring& r = ring_at(chain, ladder_.ring_index(energy));
  ++r.insertions;
  if (r.entries.size() < cap_) {
    r.entries.push_back(Entry{std::vector<double>(state.begin(), state.end()), energy});
  } else {
    Entry& slot = r.entries[rng.uniform_index(r.entries.size())];
    slot.state.assign(state.begin(), state.end());
    slot.energy = energy;
  }
}

const RingStore::Entry* RingStore::draw(std::size_t chain, std::size_t ring,
                                        Rng& rng) const {
  const Ring& r = ring_at(chain, ring);
  if (r.entries.empty()) return nullptr;
  return &r.entries[rng.uniform_index(r.entries.size())];
}

std::size_t RingStore::ring_size(std::size_t chain, std::size_t ring) const {
  return ring_at(chain, ring).entries.size();
}

std::uint64_t RingStore::insertions(std::size_t chain, std::size_t ring) const {
  return ring_at(chain, ring).insertions;
}

double ee_log_accept(double h_x, double h_y, double floor_i, double floor_j, double t_i,
                     double t_j) {
  const double u_i = std::max(h_y, floor_i) - std::max(h_x, floor_i);
  const double u_j = std::max(h_y, floor_j) - std::max(h_x, floor_j);
  return -u_i / t_i + u_j / t_j;
}

double pt_log_accept(double t_i, double t_j, double h_i, double h_j) {
  return (1.0 / t_i - 1.0 / t_j) * (h_i - h_j);
}

LeapfrogResult leapfrog(const EnergyFunction& f, double floor, std::span<double> x,
                        std::span<double> p, double eps, int n_steps) {
  const std::size_t dim = f.dimension();
  const auto period = f.period();
  std::vector<double> grad(dim);

  double raw = f.energy_and_gradient(x, grad);
  if (!std::isfinite(raw) || !all_finite(grad)) return {false, raw};

  for (int step = 0; step < n_steps; ++step) {
    // The flattened potential is constant below the floor, so its gradient
    // vanishes there.
    if (raw > floor)
      for (std::size_t d = 0; d < dim; ++d) p[d] -= 0.5 * eps * grad[d];
    for (std::size_t d = 0; d < dim; ++d) x[d] += eps * p[d];
    if (period) wrap_into_period(x, *period);
    raw = f.energy_and_gradient(x, grad);
    if (!std::isfinite(raw) || !all_finite(grad)) return {false, raw};
    if (raw > floor)
      for (std::size_t d = 0; d < dim; ++d) p[d] -= 0.5 * eps * grad[d];
  }
  return {true, raw};
}

bool hmc_step(Chain& chain, const EnergyFunction& f, Rng& rng) {
  if (!(chain.step_size > 0.0)) throw std::invalid_argument("hmc_step: step size must be positive");
  if (chain.leapfrog_steps < 1)
    throw std::invalid_argument("hmc_step: need at least one leapfrog step");

  const std::size_t dim = f.dimension();
  ++chain.hmc_attempts;

  std::vector<double> p(dim);
  const double sigma = std::sqrt(chain.temperature);
  for (double& v : p) v = rng.normal(0.0, sigma);

  const double h0 = chain.flattened_energy(chain.energy) + kinetic(p);

  std::vector<double> x(chain.state);
  const LeapfrogResult traj =
      leapfrog(f, chain.energy_floor, x, p, chain.step_size, chain.leapfrog_steps);
  if (!traj.finite) {
    ++chain.nonfinite_rejects;
    return false;
  }

  const double h1 = chain.flattened_energy(traj.raw_energy) + kinetic(p);
  const double log_accept = -(h1 - h0) / chain.temperature;
  if (log_accept >= 0.0 || std::log(rng.uniform()) < log_accept) {
    chain.state = std::move(x);
    chain.energy = traj.raw_energy;
    ++chain.hmc_accepts;
    return true;
  }
  return false;
}

TuneResult tune_step_size(Chain& chain, const EnergyFunction& f, Rng& rng, double lo,
                          double hi, int window, int max_rounds) {
  TuneResult result;
  const double mid = 0.5 * (lo + hi);
  double best_eps = chain.step_size;
  double best_distance = std::numeric_limits<double>::infinity();
  for (int round = 1; round <= max_rounds; ++round) {
    int accepted = 0;
    for (int s = 0; s < window; ++s)
      if (hmc_step(chain, f, rng)) ++accepted;
    const double acc = static_cast<double>(accepted) / static_cast<double>(window);
    result.acceptance = acc;
    result.rounds = round;
    if (std::abs(acc - mid) <= best_distance) {  // ties keep the latest step size
      best_distance = std::abs(acc - mid);
      best_eps = chain.step_size;
    }
    if (acc >= lo && acc <= hi) {
      result.converged = true;
      result.step_size = chain.step_size;
      return result;
    }
    chain.step_size = acc > hi ? chain.step_size * 1.1 : chain.step_size / 1.1;
  }
  chain.step_size = best_eps;
  result.step_size = best_eps;
  return result;
}

namespace {

struct CounterSnapshot {
  std::uint64_t hmc_attempts, hmc_accepts;
  std::uint64_t ee_attempts, ee_accepts, ee_unavailable;
  std::uint64_t pt_attempts, pt_accepts;
  std::uint64_t nonfinite;
};

CounterSnapshot snapshot(const Chain& c) {
  return {c.hmc_attempts, c.hmc_accepts, c.ee_attempts,      c.ee_accepts,
          c.ee_unavailable, c.pt_attempts, c.pt_accepts, c.nonfinite_rejects};
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void attempt_ee_jump(std::vector<Chain>& chains, const RingStore& store, std::size_t i,
                     Rng& ctrl) {
  Chain& low = chains[i];
  const Chain& high = chains[i + 1];
  const std::size_t ring = store.ladder().ring_index(low.energy);
  const RingStore::Entry* proposal = store.draw(i + 1, ring, ctrl);
  if (proposal == nullptr) {
    ++low.ee_unavailable;
    return;
  }
  ++low.ee_attempts;
  const double la = ee_log_accept(low.energy, proposal->energy, low.energy_floor,
                                  high.energy_floor, low.temperature, high.temperature);
  if (la >= 0.0 || std::log(ctrl.uniform()) < la) {
    low.state = proposal->state;
    low.energy = proposal->energy;
    ++low.ee_accepts;
  }
}

void attempt_pt_swap(std::vector<Chain>& chains, Rng& ctrl) {
  const std::size_t i = ctrl.uniform_index(chains.size() - 1);
  Chain& a = chains[i];
  Chain& b = chains[i + 1];
  ++a.pt_attempts;
  // Metropolis ratio of the two flattened targets; identical in form to the
  // equi-energy expression and equal to pt_log_accept whenever both energies
  // sit above both floors.
  const double la = ee_log_accept(a.energy, b.energy, a.energy_floor, b.energy_floor,
                                  a.temperature, b.temperature);
  if (la >= 0.0 || std::log(ctrl.uniform()) < la) {
    std::swap(a.state, b.state);
    std::swap(a.energy, b.energy);
    ++a.pt_accepts;
  }
}

}  // namespace

SweepReport run_sweeps(std::vector<Chain>& chains, RingStore* store,
                       const EnergyFunction& f, const SamplerConfig& config,
                       std::span<SweepObserver* const> observers) {
  if (chains.empty()) throw std::invalid_argument("run_sweeps: no chains");
  const bool ee_mode = config.mode == SamplerConfig::Mode::EE;
  if (ee_mode && store == nullptr)
    throw std::invalid_argument("run_sweeps: EE mode requires a ring store");
  if (ee_mode && store->ladder().chain_count() != chains.size())
    throw std::invalid_argument("run_sweeps: ladder size does not match chain count");
  if (!(config.p_ee > 0.0 && config.p_ee < 1.0))
    throw std::invalid_argument("run_sweeps: p_ee must lie in (0,1)");
  if (!(config.p_swap > 0.0 && config.p_swap < 1.0))
    throw std::invalid_argument("run_sweeps: p_swap must lie in (0,1)");

  const std::size_t n_chains = chains.size();
  SweepReport report;

  std::vector<Rng> chain_rngs;
  chain_rngs.reserve(n_chains);
  for (std::size_t i = 0; i < n_chains; ++i)
    chain_rngs.push_back(Rng::stream(config.seed, i + 1));
  Rng ctrl = Rng::stream(config.seed, 0);

  // Make every cached energy trustworthy before the first move.
  for (Chain& c : chains) c.energy = f.energy(c.state);

  // Step sizes are homed in isolation when a chain activates, then kept under
  // a trailing window through its burn-in sweeps so the final value reflects
  // the states the chain actually equilibrates into. Frozen at production.
  std::vector<TuneResult> tunes(n_chains);

  // Burn-in adaptation walks the step size on the x1.1 grid driven by a
  // trailing-window estimate. Because that grid can straddle the target
  // window and single-window estimates are noisy, the frozen production
  // value is chosen afterwards from per-notch acceptance statistics pooled
  // over the equilibrated half of the chain's burn-in: the walk oscillates
  // among the bracketing notches, so each accumulates a large sample.
  struct Adaptation {
    std::array<int, 10> window_accepts{};
    int slot = 0;
    int filled = 0;
    int step_in_window = 0;
    int adjustments = 0;
    bool last_estimate_ok = true;
    int notch = 0;                       // current position on the x1.1 grid
    double notch_base = 0.0;             // step size at notch 0
    std::map<int, std::pair<std::uint64_t, std::uint64_t>> pooled;  // notch -> (accepts, steps)
    std::uint64_t sweeps_seen = 0;
    std::uint64_t pool_after = 0;        // pool statistics from this sweep on
  };
  std::vector<Adaptation> adapt(n_chains);
  constexpr int kTuneWindow = 200;
  constexpr int kTuneMaxAdjustments = 100;
  const double tune_mid = 0.5 * (config.tune_lo + config.tune_hi);

  // `lowest` is the lowest active chain index for the staggered burn-in.
  const auto sweep_once = [&](bool production, std::size_t lowest) {
    for (std::size_t i = lowest; i < n_chains; ++i) {
      const bool accepted = hmc_step(chains[i], f, chain_rngs[i]);
      if (!production && config.tune) {
        Adaptation& ad = adapt[i];
        if (ad.notch_base == 0.0) ad.notch_base = chains[i].step_size;
        ++ad.sweeps_seen;
        if (ad.sweeps_seen > ad.pool_after) {
          auto& [acc_count, step_count] = ad.pooled[ad.notch];
          acc_count += accepted ? 1 : 0;
          ++step_count;
        }
        ad.window_accepts[ad.slot] += accepted ? 1 : 0;
        if (++ad.step_in_window == kTuneWindow) {
          ad.filled = std::min<int>(ad.filled + 1, ad.window_accepts.size());
          int total = 0;
          for (int w = 0; w < ad.filled; ++w) total += ad.window_accepts[w];
          const double acc = static_cast<double>(total) /
                             static_cast<double>(ad.filled * kTuneWindow);
          ad.last_estimate_ok = acc >= config.tune_lo && acc <= config.tune_hi;
          if (!ad.last_estimate_ok && ad.adjustments < kTuneMaxAdjustments) {
            const int dir = acc > config.tune_hi ? 1 : -1;
            ad.notch += dir;
            chains[i].step_size = ad.notch_base * std::pow(1.1, ad.notch);
            ++ad.adjustments;
            // restart the trailing estimate so decisions reflect the new
            // notch alone; stale windows otherwise drive oscillation
            ad.window_accepts.fill(0);
            ad.filled = 0;
            ad.slot = 0;
            ad.step_in_window = 0;
          } else {
            ad.slot = (ad.slot + 1) % static_cast<int>(ad.window_accepts.size());
            ad.window_accepts[ad.slot] = 0;
            ad.step_in_window = 0;
          }
        }
      }
    }
    if (ee_mode) {
      for (std::size_t i = lowest; i + 1 < n_chains; ++i)
        if (ctrl.uniform() < config.p_ee) attempt_ee_jump(chains, *store, i, ctrl);
      for (std::size_t i = std::max<std::size_t>(lowest, 1); i < n_chains; ++i)
        store->insert(i, chains[i].state, chains[i].energy, ctrl);
      if (production) {
        for (std::size_t i = 0; i < n_chains; ++i) {
          const std::size_t ring = store->ladder().ring_index(chains[i].energy);
          ++report.ring_insertions[i][ring];
        }
      }
    } else if (n_chains > 1) {
      if (ctrl.uniform() < config.p_swap) attempt_pt_swap(chains, ctrl);
    }
  };

  if (ee_mode) {
    report.ring_insertions.assign(n_chains,
                                  std::vector<std::uint64_t>(store->ladder().ring_count(), 0));
  }

  // Pool notch statistics only over the equilibrated second half of each
  // chain's total burn-in participation.
  for (std::size_t i = 0; i < n_chains; ++i) {
    const std::uint64_t blocks =
        ee_mode && config.staggered_burnin ? static_cast<std::uint64_t>(i) + 1 : 1;
    adapt[i].pool_after = blocks * config.burnin_sweeps / 2;
  }

  if (ee_mode && config.staggered_burnin) {
    for (std::size_t level = n_chains; level-- > 0;) {
      if (config.tune)
        tunes[level] =
            tune_step_size(chains[level], f, chain_rngs[level], config.tune_lo, config.tune_hi);
      for (std::uint64_t s = 0; s < config.burnin_sweeps; ++s) sweep_once(false, level);
    }
  } else {
    if (config.tune)
      for (std::size_t i = 0; i < n_chains; ++i)
        tunes[i] = tune_step_size(chains[i], f, chain_rngs[i], config.tune_lo, config.tune_hi);
    for (std::uint64_t s = 0; s < config.burnin_sweeps; ++s) sweep_once(false, 0);
  }
  if (config.tune) {
    for (std::size_t i = 0; i < n_chains; ++i) {
      Adaptation& ad = adapt[i];
      double best_distance = std::numeric_limits<double>::infinity();
      std::uint64_t best_steps = 0;
      for (const auto& [notch, counts] : ad.pooled) {
        const auto& [acc_count, step_count] = counts;
        if (step_count < 400) continue;  // too little data to trust
        const double acc = static_cast<double>(acc_count) / static_cast<double>(step_count);
        const double distance = std::abs(acc - tune_mid);
        if (distance < best_distance ||
            (distance == best_distance && step_count > best_steps)) {
          best_distance = distance;
          best_steps = step_count;
          chains[i].step_size = ad.notch_base * std::pow(1.1, notch);
        }
      }
      const bool settled =
          best_distance <= 0.5 * (config.tune_hi - config.tune_lo) + 0.03;
#ifdef EQS_TUNE_DEBUG
      std::fprintf(stderr, "[tune] chain %zu base %.4f frozen %.4f:", i, ad.notch_base,
                   chains[i].step_size);
      for (const auto& [notch, counts] : ad.pooled)
        std::fprintf(stderr, " n%+d:%.3f/%llu", notch,
                     static_cast<double>(counts.first) / std::max<std::uint64_t>(1, counts.second),
                     static_cast<unsigned long long>(counts.second));
      std::fprintf(stderr, "\n");
#endif
      if (!tunes[i].converged || !settled)
        report.warnings.push_back("step size adaptation settled outside the window for chain " +
                                  std::to_string(i));
      tunes[i].converged = tunes[i].converged && settled;
    }
  }

  std::vector<CounterSnapshot> at_production;
  at_production.reserve(n_chains);
  for (const Chain& c : chains) at_production.push_back(snapshot(c));

  for (std::uint64_t s = 0; s < config.production_sweeps; ++s) {
    sweep_once(true, 0);
    for (SweepObserver* obs : observers) obs->on_production_sweep(s, chains[0], chains);
  }

  std::uint64_t hmc_att = 0, hmc_acc = 0, ee_att = 0, ee_acc = 0, pt_att = 0, pt_acc = 0;
  for (std::size_t i = 0; i < n_chains; ++i) {
    const Chain& c = chains[i];
    const CounterSnapshot& s0 = at_production[i];
    ChainStats cs;
    cs.order = c.order;
    cs.temperature = c.temperature;
    cs.step_size = c.step_size;
    cs.hmc_attempts = c.hmc_attempts - s0.hmc_attempts;
    cs.hmc_acceptance = ratio(c.hmc_accepts - s0.hmc_accepts, cs.hmc_attempts);
    cs.ee_attempts = c.ee_attempts - s0.ee_attempts;
    cs.ee_acceptance = ratio(c.ee_accepts - s0.ee_accepts, cs.ee_attempts);
    cs.ee_unavailable = c.ee_unavailable - s0.ee_unavailable;
    cs.pt_attempts = c.pt_attempts - s0.pt_attempts;
    cs.pt_acceptance = ratio(c.pt_accepts - s0.pt_accepts, cs.pt_attempts);
    cs.nonfinite_rejects = c.nonfinite_rejects - s0.nonfinite;
    cs.tune_converged = !config.tune || tunes[i].converged;
    cs.tuned_acceptance = tunes[i].acceptance;
    report.chains.push_back(cs);

    hmc_att += cs.hmc_attempts;
    hmc_acc += c.hmc_accepts - s0.hmc_accepts;
    ee_att += cs.ee_attempts;
    ee_acc += c.ee_accepts - s0.ee_accepts;
    pt_att += cs.pt_attempts;
    pt_acc += c.pt_accepts - s0.pt_accepts;
    report.ee_unavailable_total += cs.ee_unavailable;
  }
  report.mean_hmc_acceptance = ratio(hmc_acc, hmc_att);
  report.mean_ee_acceptance = ratio(ee_acc, ee_att);
  report.mean_pt_acceptance = ratio(pt_acc, pt_att);

  if (ee_mode) {
    report.ring_sizes.assign(n_chains, std::vector<std::size_t>(store->ladder().ring_count(), 0));
    for (std::size_t i = 1; i < n_chains; ++i)
      for (std::size_t j = 0; j < store->ladder().ring_count(); ++j)
        report.ring_sizes[i][j] = store->ring_size(i, j);
  }
  return report;
}

}  // namespace eqs

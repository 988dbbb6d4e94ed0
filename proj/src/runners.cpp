#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "equisampler/bln.hpp"
#include "equisampler/experiment.hpp"
#include "equisampler/landscape1d.hpp"

namespace eqs {

namespace {

using Clock = std::chrono::steady_clock;

// Stream-id spaces carved out of the master seed. run_sweeps itself uses ids
// 0..K+1, so everything here starts well above.
constexpr std::uint64_t kInitStream = 1u << 16;
constexpr std::uint64_t kStartStream = 1u << 17;
constexpr std::uint64_t kCampaignStream = 1u << 18;

double wall_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<double> geometric_temperatures(double t_min, double t_max, std::size_t count) {
  std::vector<double> t(count);
  if (count == 1) {
    t[0] = t_min;
    return t;
  }
  const double ratio = std::pow(t_max / t_min, 1.0 / static_cast<double>(count - 1));
  double v = t_min;
  for (std::size_t i = 0; i < count; ++i, v *= ratio) t[i] = v;
  t.back() = t_max;
  return t;
}

std::vector<Chain> make_chains(const std::vector<double>& temps,
                               const std::vector<double>& floors,
                               const std::vector<double>& initial_state,
                               int leapfrog_steps, double step_size0) {
  std::vector<Chain> chains(temps.size());
  for (std::size_t i = 0; i < temps.size(); ++i) {
    chains[i].order = i;
    chains[i].temperature = temps[i];
    if (!floors.empty()) chains[i].energy_floor = floors[i];
    chains[i].state = initial_state;
    chains[i].leapfrog_steps = leapfrog_steps;
    chains[i].step_size = step_size0;
  }
  return chains;
}

std::vector<std::string> variants_of(ExperimentConfig::Mode mode) {
  switch (mode) {
    case ExperimentConfig::Mode::EE: return {"ee"};
    case ExperimentConfig::Mode::PT: return {"pt"};
    default: return {"ee", "pt"};
  }
}

// Runs jobs [0, count) on up to `threads` workers; each job writes only its
// own output slot, so results do not depend on the fan-out.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> flatten(const Conformation& c) {
  std::vector<double> x(3 * c.positions.size());
  for (std::size_t i = 0; i < c.positions.size(); ++i) {
    x[3 * i] = c.positions[i].x;
    x[3 * i + 1] = c.positions[i].y;
    x[3 * i + 2] = c.positions[i].z;
  }
  return x;
}

Conformation unflatten(const Sequence& seq, std::span<const double> x) {
  std::vector<Vec3> pos(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i)
    pos[i] = {x[3 * i], x[3 * i + 1], x[3 * i + 2]};
  return Conformation{seq, std::move(pos)};
}

// Cumulative chain-0 histogram compared against the analytic grid every
// stride sweeps.
class DeltafObserver final : public SweepObserver {
 public:
  DeltafObserver(const DensityGrid& analytic, std::uint64_t stride)
      : analytic_(analytic), stride_(stride), counts_(analytic.bins(), 0) {}

  void on_production_sweep(std::uint64_t sweep, const Chain& cold,
                           std::span<const Chain>) override {
    const double width = analytic_.bin_width();
    auto b = static_cast<std::size_t>((cold.state[0] - analytic_.lo) / width);
    if (b >= counts_.size()) b = counts_.size() - 1;
    ++counts_[b];
    ++total_;
    if ((sweep + 1) % stride_ == 0) {
      DensityGrid grid;
      grid.lo = analytic_.lo;
      grid.hi = analytic_.hi;
      grid.values.resize(counts_.size());
      const double mass = static_cast<double>(total_) * width;
      for (std::size_t i = 0; i < counts_.size(); ++i)
        grid.values[i] = static_cast<double>(counts_[i]) / mass;
      series.emplace_back(sweep + 1, delta_f(grid, analytic_));
    }
  }

  std::vector<std::pair<std::uint64_t, double>> series;

 private:
  const DensityGrid& analytic_;
  std::uint64_t stride_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Chain-0 RMSD-to-native snapshots every stride sweeps; optionally pools all
// chains into the S_x sample.
class RmsdObserver final : public SweepObserver {
 public:
  RmsdObserver(const Conformation& native, std::uint64_t stride, bool all_chains)
      : native_(native), stride_(stride), all_chains_(all_chains) {}

  void on_production_sweep(std::uint64_t sweep, const Chain& cold,
                           std::span<const Chain> chains) override {
    if (sweep % stride_ != 0) return;
    const Conformation c = unflatten(native_.sequence, cold.state);
    const double r = rmsd(c, native_);
    series.emplace_back(sweep, r, cold.energy);
    sx_samples.push_back(r);
    if (all_chains_)
      for (std::size_t i = 1; i < chains.size(); ++i)
        sx_samples.push_back(rmsd(unflatten(native_.sequence, chains[i].state), native_));
  }

  std::vector<std::tuple<std::uint64_t, double, double>> series;
  std::vector<double> sx_samples;

 private:
  const Conformation& native_;
  std::uint64_t stride_;
  bool all_chains_;
};

SamplerConfig sampler_config(const ExperimentConfig& cfg, const std::string& variant,
                             std::uint64_t seed) {
  SamplerConfig sc;
  sc.mode = variant == "ee" ? SamplerConfig::Mode::EE : SamplerConfig::Mode::PT;
  sc.p_ee = cfg.p_ee;
  sc.p_swap = cfg.p_swap;
  sc.burnin_sweeps = cfg.burnin_sweeps;
  sc.production_sweeps = cfg.production_sweeps;
  sc.seed = seed;
  // The 1D bench follows the sequential-activation protocol; the bead-chain
  // runs keep lockstep burn-in (a ninefold burn-in span would dominate their
  // runtime).
  sc.staggered_burnin = cfg.kind == ExperimentConfig::Kind::Bench1d;
  return sc;
}

void flush_partial(RunReport& report, const std::string& what) {
  report.partial = true;
  report.warnings.push_back(what);
  emit_reports(report, report.config.output_dir);
}

}  // namespace

RunReport run_bench1d(const ExperimentConfig& config) {
  config.validate();
  if (config.kind != ExperimentConfig::Kind::Bench1d)
    throw std::invalid_argument("run_bench1d: config kind mismatch");
  const auto t0 = Clock::now();

  const std::vector<double> temps =
      config.temperatures.empty() ? ExperimentConfig::bench1d_temperatures()
                                  : config.temperatures;
  const std::vector<double> levels =
      config.energy_levels.empty() ? ExperimentConfig::bench1d_energy_levels()
                                   : config.energy_levels;
  if (temps.size() != config.k + 1 || levels.size() != config.k + 2)
    throw std::invalid_argument("run_bench1d: ladder sizes do not match k");

  RunReport report;
  report.config = config;

  const FourierLandscape landscape;
  const DensityGrid analytic = DensityGrid::analytic(landscape, config.bins);
  const double period = landscape.period_length();

  try {
    for (const std::uint64_t seed : config.seeds) {
      // Both variants consume the same initial states, one uniform draw per
      // chain.
      Rng init = Rng::stream(seed, kInitStream);
      std::vector<std::vector<double>> starts(temps.size());
      for (auto& s : starts) s = {init.uniform(0.0, period)};

      // Both samplers run the same flattened chain family and, in paired
      // mode, the same tuned step sizes; they differ only in the interaction
      // move.
      std::vector<double> tuned_steps;
      for (const std::string& variant : variants_of(config.mode)) {
        std::vector<Chain> chains =
            make_chains(temps, levels, {}, config.leapfrog_steps, 0.1);
        for (std::size_t i = 0; i < chains.size(); ++i) chains[i].state = starts[i];

        SamplerConfig sc = sampler_config(config, variant, seed);
        if (!tuned_steps.empty()) {
          sc.tune = false;
          for (std::size_t i = 0; i < chains.size(); ++i)
            chains[i].step_size = tuned_steps[i];
        }

        RingStore store(EnergyLadder(levels), config.ring_cap);
        DeltafObserver deltaf(analytic, config.deltaf_stride);
        SweepObserver* obs[] = {&deltaf};

        VariantRun run;
        run.variant = variant;
        run.seed = seed;
        run.stats = run_sweeps(chains, variant == "ee" ? &store : nullptr, landscape, sc, obs);
        run.deltaf = std::move(deltaf.series);
        report.runs.push_back(std::move(run));
        if (tuned_steps.empty())
          for (const Chain& c : chains) tuned_steps.push_back(c.step_size);
      }
    }
  } catch (...) {
    report.wall_ms = wall_since(t0);
    flush_partial(report, "bench1d aborted mid-run");
    throw;
  }

  report.wall_ms = wall_since(t0);
  emit_reports(report, config.output_dir);
  return report;
}

namespace {

// One campaign restart: a random all-torsion start relaxed, a tempered
// exploration run whose cold-chain snapshots are quenched, then torsion-move
// basin hopping from the best snapshot minimum.
struct CampaignRestart {
  double best_energy = std::numeric_limits<double>::infinity();
  Conformation best;
  std::vector<std::string> warnings;
};

CampaignRestart campaign_restart(const BLNModel& model, const ExperimentConfig& cfg,
                                 std::uint64_t master, std::size_t restart) {
  const Sequence& seq = model.sequence();
  const std::size_t n_torsions = seq.size() - 3;
  Rng rng = Rng::stream(master, kCampaignStream + restart);

  // Exploratory quenches are deliberately loose and iteration-capped: open
  // structures have nearly flat directions that full convergence would crawl
  // along, and candidate ranking only needs basin-level energies. Only the
  // campaign winner gets polished at full tolerance.
  const double loose_tol = std::max(cfg.quench_tolerance, 1e-3);
  const std::size_t loose_cap = 2500;

  Conformation c = model.extended();
  for (std::size_t d = 0; d < n_torsions; ++d)
    c = set_torsion(c, d, std::numbers::pi - 2.0 * std::numbers::pi * rng.uniform());
  QuenchResult relaxed = quench(model, c, 1e-2, 2000);

  CampaignRestart out{relaxed.energy, relaxed.conformation, {}};

  // Tempered exploration; the spacing keeps replica exchange alive for the
  // 3n-dimensional system.
  const std::vector<double> temps = geometric_temperatures(0.35, 1.6, 8);
  std::vector<Chain> chains = make_chains(temps, {}, flatten(relaxed.conformation),
                                          cfg.leapfrog_steps, 0.01);

  struct SnapshotObserver final : SweepObserver {
    std::uint64_t stride;
    std::vector<std::vector<double>> states;
    void on_production_sweep(std::uint64_t sweep, const Chain& cold,
                             std::span<const Chain> chains_) override {
      if (sweep % stride != 0) return;
      states.push_back(cold.state);
      if (chains_.size() > 1) states.push_back(chains_[1].state);
    }
  } snaps;
  snaps.stride = std::max<std::uint64_t>(1, cfg.explore_stride);

  SamplerConfig sc;
  sc.mode = SamplerConfig::Mode::PT;
  sc.p_swap = 0.3;
  sc.p_ee = 0.3;
  sc.burnin_sweeps = std::min<std::uint64_t>(500, cfg.explore_sweeps / 4);
  sc.production_sweeps = cfg.explore_sweeps;
  sc.seed = Rng::stream(master, kCampaignStream + 1024 + restart).next_u64();
  SweepObserver* obs[] = {&snaps};
  const SweepReport explore = run_sweeps(chains, nullptr, model, sc, obs);
  for (const std::string& w : explore.warnings)
    out.warnings.push_back("restart " + std::to_string(restart) + ": " + w);

  for (const auto& state : snaps.states) {
    const QuenchResult q = quench(model, unflatten(seq, state), loose_tol, loose_cap);
    if (q.energy < out.best_energy) {
      out.best_energy = q.energy;
      out.best = q.conformation;
    }
  }

  // Torsion-move basin hopping on the quenched landscape, annealing the
  // acceptance temperature toward the end to settle into the deepest funnel
  // found.
  const std::uint64_t bh_steps = std::max<std::uint64_t>(100, cfg.explore_sweeps / 40);
  Conformation current = out.best;
  double current_energy = out.best_energy;
  for (std::uint64_t k = 0; k < bh_steps; ++k) {
    Conformation trial = current;
    const std::size_t moves = 1 + rng.uniform_index(3);
    for (std::size_t m = 0; m < moves; ++m) {
      const std::size_t d = rng.uniform_index(n_torsions);
      const double phi = dihedral_angle(trial, d);
      const double delta = rng.uniform() < 0.2
                               ? std::numbers::pi - 2.0 * std::numbers::pi * rng.uniform()
                               : rng.normal(0.0, 0.5);
      trial = set_torsion(trial, d, phi + delta);
    }
    QuenchResult q = quench(model, trial, loose_tol, loose_cap);
    const double progress = static_cast<double>(k) / static_cast<double>(bh_steps);
    const double hop_t = 0.8 * (1.0 - progress) + 0.25 * progress;
    if (q.energy < current_energy ||
        rng.uniform() < std::exp(-(q.energy - current_energy) / hop_t)) {
      current = q.conformation;
      current_energy = q.energy;
    }
    if (q.energy < out.best_energy) {
      out.best_energy = q.energy;
      out.best = std::move(q.conformation);
    }
  }
  return out;
}

}  // namespace

RunReport run_quench_campaign(const ExperimentConfig& config) {
  config.validate();
  if (config.kind != ExperimentConfig::Kind::Quench)
    throw std::invalid_argument("run_quench_campaign: config kind mismatch");
  const auto t0 = Clock::now();

  RunReport report;
  report.config = config;

  const BLNModel model(Sequence::parse(config.sequence),
                       BLNParams{.torsion_rule = config.parsed_torsion_rule()});
  const std::uint64_t master = config.seeds.front();

  std::vector<CampaignRestart> results(config.starts);
  try {
    parallel_for(config.starts, config.effective_threads(), [&](std::size_t r) {
      results[r] = campaign_restart(model, config, master, r);
    });
  } catch (...) {
    report.wall_ms = wall_since(t0);
    flush_partial(report, "quench campaign aborted");
    throw;
  }

  QuenchOutcome outcome;
  std::size_t best = 0;
  for (std::size_t r = 0; r < results.size(); ++r) {
    outcome.start_energies.push_back(results[r].best_energy);
    for (const std::string& w : results[r].warnings) report.warnings.push_back(w);
    if (results[r].best_energy < results[best].best_energy) best = r;
  }

  // Final polish of the campaign best at full accuracy.
  const QuenchResult polished =
      quench(model, results[best].best, std::min(config.quench_tolerance, 1e-6), 100000);
  outcome.h_min = polished.energy;
  outcome.h_0 = polished.energy - 0.05 * std::abs(polished.energy);
  outcome.h_unf = model.unfolded_energy();
  outcome.best_start = best;

  std::filesystem::create_directories(config.output_dir);
  const std::filesystem::path native_path =
      std::filesystem::path(config.output_dir) / "native.xyz";
  write_xyz_file(native_path, polished.conformation,
                 "quench campaign minimum, h = " + std::to_string(polished.energy));
  outcome.native_path = native_path.string();

  report.quench = std::move(outcome);
  report.wall_ms = wall_since(t0);
  emit_reports(report, config.output_dir);
  return report;
}

RunReport run_fold(const ExperimentConfig& config) {
  config.validate();
  if (config.kind != ExperimentConfig::Kind::Fold)
    throw std::invalid_argument("run_fold: config kind mismatch");
  const auto t0 = Clock::now();

  RunReport report;
  report.config = config;

  const BLNModel model(Sequence::parse(config.sequence),
                       BLNParams{.torsion_rule = config.parsed_torsion_rule()});
  if (!std::filesystem::exists(config.native_file))
    throw std::invalid_argument("run_fold: native file not found: " + config.native_file);
  const Conformation native = read_xyz_file(config.native_file);
  if (native.sequence != model.sequence())
    throw std::invalid_argument("run_fold: native file sequence does not match config");

  const double h_min = model.energy(native);
  const double h_0 = h_min - 0.05 * std::abs(h_min);
  const double h_unf = model.unfolded_energy();
  if (!(h_unf > h_0))
    throw std::invalid_argument("run_fold: unfolded energy does not exceed H_0");

  std::vector<double> levels;
  if (!config.energy_levels.empty()) {
    levels = config.energy_levels;
  } else {
    const EnergyLadder built =
        config.ladder == "scaled"
            ? build_ladder_geometric_increments(h_0, h_unf, config.k, config.lambda)
            : build_ladder_geometric_offsets(h_0, h_unf, config.k);
    levels.assign(built.levels().begin(), built.levels().end());
  }
  const std::vector<double> temps =
      config.temperatures.empty()
          ? geometric_temperatures(config.t_min, config.t_max, config.k + 1)
          : config.temperatures;

  const std::uint64_t master = config.seeds.front();
  const std::vector<std::string> variants = variants_of(config.mode);

  struct Job {
    std::size_t start_index;
    std::string variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  // Paired seeds: both variants of one start share the seed and the initial
  // structure, so differences reflect the sampler alone.
  std::vector<Conformation> initials;
  for (std::size_t s = 0; s < config.initial_structures; ++s) {
    Rng rng = Rng::stream(master, kStartStream + s);
    initials.push_back(randomize_loops(native, model, rng));
    const std::uint64_t seed = Rng::stream(master, kStartStream + 1024 + s).next_u64();
    for (const std::string& v : variants) jobs.push_back({s, v, seed});
  }

  std::vector<TrajectoryRecord> records(jobs.size());
  std::vector<std::vector<double>> sx_samples(jobs.size());
  try {
    // Paired variants share one start: the first variant tunes, the second
    // reuses the tuned step sizes, so trajectories differ by the interaction
    // move alone.
    std::vector<std::vector<double>> tuned(config.initial_structures);
    parallel_for(config.initial_structures, config.effective_threads(), [&](std::size_t s) {
      for (std::size_t v = 0; v < variants.size(); ++v) {
        const std::size_t ji = s * variants.size() + v;
        const Job& job = jobs[ji];
        const Conformation& start = initials[job.start_index];
        std::vector<Chain> chains =
            make_chains(temps, levels, flatten(start), config.leapfrog_steps, 0.01);
        SamplerConfig sc = sampler_config(config, job.variant, job.seed);
        if (v > 0) {
          sc.tune = false;
          for (std::size_t i = 0; i < chains.size(); ++i)
            chains[i].step_size = tuned[s][i];
        }
        RingStore store(EnergyLadder(levels), config.ring_cap);
        RmsdObserver rmsd_obs(native, config.snapshot_stride, config.sx_all_chains);
        SweepObserver* obs[] = {&rmsd_obs};

        TrajectoryRecord rec;
        rec.index = ji;
        rec.variant = job.variant;
        rec.start_index = job.start_index;
        rec.seed = job.seed;
        rec.initial_rmsd = rmsd(start, native);
        rec.stats = run_sweeps(chains, job.variant == "ee" ? &store : nullptr, model, sc, obs);
        rec.series = std::move(rmsd_obs.series);
        records[ji] = std::move(rec);
        sx_samples[ji] = std::move(rmsd_obs.sx_samples);
        if (v == 0)
          for (const Chain& c : chains) tuned[s].push_back(c.step_size);
      }
    });
  } catch (...) {
    report.wall_ms = wall_since(t0);
    flush_partial(report, "fold run aborted");
    throw;
  }
  report.trajectories = std::move(records);

  // Pooled S_x curves on the 0.25 A grid.
  for (const std::string& v : variants) {
    SxCurve curve;
    curve.variant = v;
    std::vector<double> pooled;
    for (std::size_t ji = 0; ji < jobs.size(); ++ji)
      if (jobs[ji].variant == v)
        pooled.insert(pooled.end(), sx_samples[ji].begin(), sx_samples[ji].end());
    const double total = static_cast<double>(pooled.size());
    for (int i = 1; i <= 40; ++i) {
      const double x = 0.25 * i;
      const double hits =
          static_cast<double>(std::count_if(pooled.begin(), pooled.end(),
                                            [x](double r) { return r <= x; }));
      curve.x.push_back(x);
      curve.p.push_back(total > 0 ? hits / total : 0.0);
      if (i == 6) curve.s_15 = curve.p.back();
    }
    report.sx.push_back(std::move(curve));
  }

  // Aggregate per-variant acceptance statistics mirror the bench report shape.
  for (const std::string& v : variants) {
    VariantRun agg;
    agg.variant = v;
    agg.seed = master;
    double hmc = 0, ee = 0, pt = 0;
    std::size_t count = 0;
    for (const TrajectoryRecord& rec : report.trajectories) {
      if (rec.variant != v) continue;
      hmc += rec.stats.mean_hmc_acceptance;
      ee += rec.stats.mean_ee_acceptance;
      pt += rec.stats.mean_pt_acceptance;
      ++count;
    }
    if (count > 0) {
      agg.stats.mean_hmc_acceptance = hmc / static_cast<double>(count);
      agg.stats.mean_ee_acceptance = ee / static_cast<double>(count);
      agg.stats.mean_pt_acceptance = pt / static_cast<double>(count);
    }
    report.runs.push_back(std::move(agg));
  }

  report.wall_ms = wall_since(t0);
  emit_reports(report, config.output_dir);
  return report;
}

RunReport run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentConfig::Kind::Bench1d: return run_bench1d(config);
    case ExperimentConfig::Kind::Quench: return run_quench_campaign(config);
    default: return run_fold(config);
  }
}

}  // namespace eqs

// Acceptance suite: end-to-end checks of the sampling toolkit at desk scale.
// Prints one PASS/FAIL line per criterion and exits nonzero when any executed
// criterion fails. The folding comparison is far heavier than the rest and
// only runs with --long.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "equisampler/bln.hpp"
#include "equisampler/experiment.hpp"
#include "equisampler/landscape1d.hpp"
#include "equisampler/sampler.hpp"

using namespace eqs;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s criterion-%d (%s): %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "eqs_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// ---- shared 1D benchmark runs -------------------------------------------

struct BenchData {
  RunReport both_cap5000;  // EE + PT, 5 seeds
  RunReport ee_cap2500;
  RunReport ee_cap10000;
};

ExperimentConfig bench_config(const std::string& tag, ExperimentConfig::Mode mode,
                              std::size_t cap) {
  ExperimentConfig c;
  c.kind = ExperimentConfig::Kind::Bench1d;
  c.mode = mode;
  c.k = 4;
  c.p_ee = 0.15;
  c.p_swap = 0.15;
  c.ring_cap = cap;
  c.burnin_sweeps = 20000;
  c.production_sweeps = 100000;
  c.leapfrog_steps = 1;
  c.seeds = {1, 2, 3, 4, 5};
  c.bins = 500;
  c.deltaf_stride = 200;
  c.output_dir = (work_dir() / tag).string();
  return c;
}

const BenchData& bench_data() {
  static const BenchData data = [] {
    BenchData d;
    std::fprintf(stderr, "[acceptance] running 1D benchmark matrix (3 configurations x 5 seeds)...\n");
    d.both_cap5000 = run_bench1d(bench_config("bench_cap5000", ExperimentConfig::Mode::Both, 5000));
    d.ee_cap2500 = run_bench1d(bench_config("bench_cap2500", ExperimentConfig::Mode::EE, 2500));
    d.ee_cap10000 = run_bench1d(bench_config("bench_cap10000", ExperimentConfig::Mode::EE, 10000));
    return d;
  }();
  return data;
}

double deltaf_at(const VariantRun& run, std::uint64_t sweep) {
  for (const auto& [s, v] : run.deltaf)
    if (s == sweep) return v;
  return std::nan("");
}

double deltaf_window_average(const VariantRun& run, std::uint64_t lo, std::uint64_t hi) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [s, v] : run.deltaf)
    if (s >= lo && s <= hi) {
      sum += v;
      ++count;
    }
  return count > 0 ? sum / static_cast<double>(count) : std::nan("");
}

// ---- criteria -------------------------------------------------------------

void criterion_1_acceptance_ratios() {
  // Acceptance of the measurement chain's interaction moves, seed-averaged;
  // per-chain and pooled values live in the emitted summaries.
  const BenchData& d = bench_data();
  double ee = 0.0, pt = 0.0;
  int ee_n = 0, pt_n = 0;
  for (const VariantRun& run : d.both_cap5000.runs) {
    if (run.variant == "ee") {
      ee += run.stats.chains[0].ee_acceptance;
      ++ee_n;
    } else {
      pt += run.stats.chains[0].pt_acceptance;
      ++pt_n;
    }
  }
  ee /= ee_n;
  pt /= pt_n;
  const bool pass = ee >= 0.72 && ee <= 0.92 && pt >= 0.35 && pt <= 0.55;
  report(1, "1d-acceptance-ratios", pass,
         "measurement-chain EE jump acceptance " + fmt(ee) +
             " (band [0.72, 0.92]), swap acceptance " + fmt(pt) +
             " (band [0.35, 0.55]), 5 seeds");
}

void criterion_2_hmc_tuning() {
  const BenchData& d = bench_data();
  double lo = 1.0, hi = 0.0;
  bool pass = true;
  int chains = 0;
  for (const RunReport* rep : {&d.both_cap5000, &d.ee_cap2500, &d.ee_cap10000}) {
    for (const VariantRun& run : rep->runs) {
      for (const ChainStats& c : run.stats.chains) {
        lo = std::min(lo, c.hmc_acceptance);
        hi = std::max(hi, c.hmc_acceptance);
        pass = pass && c.hmc_acceptance >= 0.35 && c.hmc_acceptance <= 0.55;
        ++chains;
      }
    }
  }
  report(2, "hmc-step-size-tuning", pass,
         "post-burn-in HMC acceptance of " + std::to_string(chains) + " tuned chains in [" +
             fmt(lo) + ", " + fmt(hi) + "], required [0.35, 0.55]");
}

void criterion_3_convergence_ordering() {
  const BenchData& d = bench_data();
  int ee_better = 0, pairs = 0;
  for (std::size_t i = 0; i + 1 < d.both_cap5000.runs.size(); i += 2) {
    const VariantRun& ee = d.both_cap5000.runs[i];
    const VariantRun& pt = d.both_cap5000.runs[i + 1];
    ++pairs;
    if (deltaf_at(ee, 40000) < deltaf_at(pt, 40000)) ++ee_better;
  }

  double avg2500 = 0.0, avg10000 = 0.0;
  for (const VariantRun& run : d.ee_cap2500.runs)
    avg2500 += deltaf_window_average(run, 10000, 40000);
  for (const VariantRun& run : d.ee_cap10000.runs)
    avg10000 += deltaf_window_average(run, 10000, 40000);
  avg2500 /= static_cast<double>(d.ee_cap2500.runs.size());
  avg10000 /= static_cast<double>(d.ee_cap10000.runs.size());
  const double rel_gap = std::abs(avg2500 - avg10000) / std::max(avg2500, avg10000);

  const bool pass = ee_better >= 4 && rel_gap >= 0.05;
  report(3, "convergence-ordering", pass,
         "EE beats the tempering baseline at sweep 40000 in " + std::to_string(ee_better) +
             "/" + std::to_string(pairs) + " paired seeds (need >= 4); cap 2500 vs 10000 " +
             "window-averaged deltaf " + fmt(avg2500) + " vs " + fmt(avg10000) +
             ", relative gap " + fmt(rel_gap) + " (need >= 0.05)");
}

void criterion_4_occupancy_pattern() {
  const BenchData& d = bench_data();
  std::vector<std::vector<std::uint64_t>> total(5, std::vector<std::uint64_t>(5, 0));
  for (const VariantRun& run : d.both_cap5000.runs) {
    if (run.variant != "ee") continue;
    for (std::size_t c = 0; c < 5; ++c)
      for (std::size_t r = 0; r < 5; ++r) total[c][r] += run.stats.ring_insertions[c][r];
  }
  const auto argmax = [](const std::vector<std::uint64_t>& row) {
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  };
  const bool cold_low = argmax(total[0]) == 0;
  const bool hot_high = argmax(total[4]) == 4;

  // Extreme-ring columns must trend monotonically along the chain order; one
  // adjacent inversion is tolerated as trend noise.
  int inversions_low = 0, inversions_high = 0;
  for (std::size_t c = 0; c + 1 < 5; ++c) {
    if (total[c][0] < total[c + 1][0]) ++inversions_low;
    if (total[c][4] > total[c + 1][4]) ++inversions_high;
  }
  const bool pass = cold_low && hot_high && inversions_low <= 1 && inversions_high <= 1;
  std::string cols = "ring0 counts:";
  for (std::size_t c = 0; c < 5; ++c) cols += " " + std::to_string(total[c][0]);
  cols += "; ring4 counts:";
  for (std::size_t c = 0; c < 5; ++c) cols += " " + std::to_string(total[c][4]);
  report(4, "ring-occupancy-pattern", pass, cols);
}

void criterion_5_analytic_checks() {
  const FourierLandscape f;
  const double mass =
      simpson(0.0, f.period_length(), 1 << 17, [&](double x) { return f.density(x); });
  double min_h = 1e300;
  for (int i = 0; i < 1000000; ++i)
    min_h = std::min(min_h, f.h(10.0 * static_cast<double>(i) / 1000000.0));

  double direct = 0.0;
  const double w = 2.0 * std::numbers::pi / f.period_length();
  for (std::size_t i = 0; i < f.coefficients().size(); ++i)
    direct += f.coefficients()[i] * std::sin(static_cast<double>(i + 1) * w * 2.5);
  direct *= 2.0;

  const bool pass = std::abs(mass - 1.0) <= 1e-8 && min_h > -10.0 &&
                    std::abs(f.h(2.5) - (-3.08)) <= 1e-2 &&
                    std::abs(f.h(2.5) - direct) <= 1e-12;
  report(5, "analytic-density-checks", pass,
         "density mass deviates by " + fmt(std::abs(mass - 1.0)) + ", dense-scan min h = " +
             fmt(min_h) + ", h(2.5) = " + fmt(f.h(2.5)));
}

void criterion_6_gradient_suites() {
  bool pass = true;
  double worst_1d = 0.0, worst_bln = 0.0, worst_force = 0.0, worst_torque = 0.0;

  const FourierLandscape f;
  std::mt19937_64 rng(6001);
  std::uniform_real_distribution<double> ux(0.0, 10.0);
  for (int i = 0; i < 25; ++i) {
    const double x = ux(rng);
    const double fd = (f.h(x + 1e-6) - f.h(x - 1e-6)) / 2e-6;
    const double an = f.dh(x);
    worst_1d = std::max(worst_1d,
                        std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)}));
  }
  pass = pass && worst_1d <= 1e-6;

  const BLNModel model(Sequence::parse("(BL)2B5N3(LB)4N3B9N3(LB)5L"));
  Rng starts(6002);
  const Conformation ext = model.extended();
  const auto non_degenerate = [&](Rng& r) {
    for (;;) {
      Conformation c = randomize_loops(ext, model, r);
      double closest = 1e300;
      for (std::size_t i = 0; i + 3 < c.positions.size(); ++i)
        for (std::size_t j = i + 3; j < c.positions.size(); ++j)
          closest = std::min(closest, norm(c.positions[j] - c.positions[i]));
      if (closest >= 0.85) return c;
    }
  };
  for (int trial = 0; trial < 20; ++trial) {
    const Conformation c = non_degenerate(starts);
    std::vector<double> x(3 * 46);
    for (std::size_t i = 0; i < 46; ++i) {
      x[3 * i] = c.positions[i].x;
      x[3 * i + 1] = c.positions[i].y;
      x[3 * i + 2] = c.positions[i].z;
    }
    std::vector<double> g(x.size());
    model.gradient(std::span<const double>(x), std::span<double>(g));
    std::uniform_int_distribution<std::size_t> coord(0, x.size() - 1);
    for (int probe = 0; probe < 12; ++probe) {
      const std::size_t dcoord = coord(rng);
      std::vector<double> xp = x, xm = x;
      xp[dcoord] += 1e-6;
      xm[dcoord] -= 1e-6;
      const double fd = (model.energy(std::span<const double>(xp)) -
                         model.energy(std::span<const double>(xm))) /
                        2e-6;
      worst_bln = std::max(worst_bln, std::abs(fd - g[dcoord]) /
                                          std::max({1.0, std::abs(fd), std::abs(g[dcoord])}));
    }
    Vec3 force{}, torque{}, centroid{};
    std::vector<Vec3> gv(46);
    model.gradient(std::span<const Vec3>(c.positions), std::span<Vec3>(gv));
    for (const Vec3& p : c.positions) centroid += p;
    centroid = (1.0 / 46.0) * centroid;
    for (std::size_t i = 0; i < 46; ++i) {
      force += gv[i];
      torque += cross(c.positions[i] - centroid, gv[i]);
    }
    worst_force = std::max(worst_force, norm(force));
    worst_torque = std::max(worst_torque, norm(torque));
  }
  pass = pass && worst_bln <= 1e-6 && worst_force <= 1e-10 && worst_torque <= 1e-10;
  report(6, "gradient-suites", pass,
         "worst relative FD error 1d " + fmt(worst_1d) + ", chain " + fmt(worst_bln) +
             " (need <= 1e-6); net force " + fmt(worst_force) + ", net torque " +
             fmt(worst_torque) + " (need <= 1e-10)");
}

// Measurement-chain EE-jump acceptance averaged over the EE trajectories.
double fold_ee_acceptance(const RunReport& rep) {
  double acc = 0.0;
  int n = 0;
  for (const TrajectoryRecord& t : rep.trajectories) {
    if (t.variant != "ee") continue;
    acc += t.stats.chains[0].ee_acceptance;
    ++n;
  }
  return n > 0 ? acc / n : 0.0;
}

void criterion_7_protein_ladder() {
  std::fprintf(stderr, "[acceptance] quench campaign + ladder comparison...\n");
  ExperimentConfig campaign;
  campaign.kind = ExperimentConfig::Kind::Quench;
  campaign.seeds = {21};
  campaign.starts = 2;
  campaign.explore_sweeps = 8000;
  campaign.explore_stride = 100;
  campaign.quench_tolerance = 1e-4;
  campaign.output_dir = (work_dir() / "campaign").string();
  const RunReport quenched = run_quench_campaign(campaign);

  // same seed list reproduces the reference bit for bit, and H_0 follows
  // the shifted-minimum rule exactly
  ExperimentConfig campaign_rerun = campaign;
  campaign_rerun.output_dir = (work_dir() / "campaign_rerun").string();
  const RunReport requenched = run_quench_campaign(campaign_rerun);
  const auto slurp_file = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const bool campaign_deterministic =
      slurp_file(quenched.quench->native_path) == slurp_file(requenched.quench->native_path);
  const bool h0_exact = quenched.quench->h_0 ==
                        quenched.quench->h_min - 0.05 * std::abs(quenched.quench->h_min);

  ExperimentConfig fold;
  fold.kind = ExperimentConfig::Kind::Fold;
  fold.mode = ExperimentConfig::Mode::EE;
  fold.k = 8;
  fold.t_min = 0.14;
  fold.t_max = 0.38;
  fold.lambda = 1.2;
  fold.seeds = {22};
  fold.burnin_sweeps = 80000;
  fold.production_sweeps = 30000;
  fold.ring_cap = 400;
  fold.initial_structures = 2;
  fold.snapshot_stride = 500;
  fold.native_file = quenched.quench->native_path;
  fold.ladder = "scaled";
  fold.output_dir = (work_dir() / "fold_scaled").string();
  const RunReport scaled = run_fold(fold);

  fold.ladder = "naive";
  fold.output_dir = (work_dir() / "fold_naive").string();
  const RunReport naive = run_fold(fold);

  const double acc_scaled = fold_ee_acceptance(scaled);
  const double acc_naive = fold_ee_acceptance(naive);
  const bool pass = acc_scaled >= 0.6 && acc_naive < acc_scaled &&
                    campaign_deterministic && h0_exact;
  report(7, "protein-ladder-effect", pass,
         "h_min " + fmt(quenched.quench->h_min) + ", measurement-chain EE acceptance " +
             fmt(acc_scaled) + " with the rescaled ladder (need >= 0.6) vs " +
             fmt(acc_naive) + " with the plain geometric ladder (must be lower); campaign " +
             (campaign_deterministic ? "reproducible" : "NOT reproducible") +
             ", H_0 rule " + (h0_exact ? "exact" : "violated"));
}

void criterion_8_folding_comparison() {
  std::fprintf(stderr, "[acceptance] long folding comparison...\n");
  ExperimentConfig campaign;
  campaign.kind = ExperimentConfig::Kind::Quench;
  campaign.seeds = {31};
  campaign.starts = 3;
  campaign.explore_sweeps = 12000;
  campaign.quench_tolerance = 1e-4;
  campaign.output_dir = (work_dir() / "campaign_long").string();
  const RunReport quenched = run_quench_campaign(campaign);

  // Disjoint-seed campaign agreement, reported for the record.
  ExperimentConfig campaign2 = campaign;
  campaign2.seeds = {32};
  campaign2.output_dir = (work_dir() / "campaign_long2").string();
  const RunReport quenched2 = run_quench_campaign(campaign2);
  std::fprintf(stderr, "[acceptance] campaign minima: %.4f vs %.4f (disjoint seeds)\n",
               quenched.quench->h_min, quenched2.quench->h_min);

  ExperimentConfig fold;
  fold.kind = ExperimentConfig::Kind::Fold;
  fold.mode = ExperimentConfig::Mode::Both;
  fold.k = 8;
  fold.seeds = {33};
  fold.burnin_sweeps = 2000;
  fold.production_sweeps = 50000;
  fold.ring_cap = 400;
  fold.initial_structures = 4;
  fold.snapshot_stride = 10;
  fold.native_file = quenched.quench->native_path;
  fold.output_dir = (work_dir() / "fold_long").string();
  const RunReport rep = run_fold(fold);

  // Per-start S_1.5 fractions from the chain-0 snapshots.
  const auto fraction = [&](const TrajectoryRecord& t) {
    std::size_t in = 0;
    for (const auto& [sweep, r, e] : t.series)
      if (r <= 1.5) ++in;
    return static_cast<double>(in) / static_cast<double>(t.series.size());
  };
  int ee_at_least = 0, total = 0;
  std::string detail;
  for (std::size_t s = 0; s < fold.initial_structures; ++s) {
    double fe = 0.0, fp = 0.0;
    for (const TrajectoryRecord& t : rep.trajectories) {
      if (t.start_index != s) continue;
      (t.variant == "ee" ? fe : fp) = fraction(t);
    }
    ++total;
    if (fe >= fp) ++ee_at_least;
    detail += " start" + std::to_string(s) + " ee=" + fmt(fe) + " pt=" + fmt(fp) + ";";
  }
  const bool pass = 2 * ee_at_least > total;
  report(8, "folding-comparison", pass,
         "EE S_1.5 fraction >= tempering baseline on " + std::to_string(ee_at_least) + "/" +
             std::to_string(total) + " paired starts;" + detail);
}

void criterion_9_invariant_suites() {
  bool pass = true;
  std::string detail;

  // bounded rings under random insert sequences
  {
    RingStore store(EnergyLadder({-10.0, -8.7, -7.5, -5.0, -0.2, 10.0}), 16);
    Rng rng(9001);
    std::vector<double> state = {0.5};
    bool ok = true;
    for (int i = 0; i < 20000; ++i) {
      store.insert(1 + rng.uniform_index(4), state, rng.uniform(-12.0, 12.0), rng);
    }
    for (std::size_t c = 1; c <= 4; ++c)
      for (std::size_t r = 0; r < 5; ++r) {
        ok = ok && store.ring_size(c, r) <= 16;
        ok = ok && store.insertions(c, r) >= store.ring_size(c, r);
      }
    pass = pass && ok;
    if (!ok) detail += " ring-cap";
  }

  // leapfrog reversibility
  {
    const FourierLandscape f;
    Rng rng(9002);
    bool ok = true;
    for (int i = 0; i < 10; ++i) {
      std::vector<double> x = {rng.uniform(0.0, 10.0)}, p = {rng.normal()};
      const double x0 = x[0], p0 = p[0];
      leapfrog(f, -1e300, x, p, 0.05, 30);
      p[0] = -p[0];
      leapfrog(f, -1e300, x, p, 0.05, 30);
      ok = ok && std::abs(x[0] - x0) <= 1e-10 && std::abs(-p[0] - p0) <= 1e-10;
    }
    pass = pass && ok;
    if (!ok) detail += " reversibility";
  }

  // Gaussian variance oracle
  {
    struct Quadratic final : EnergyFunction {
      std::size_t dimension() const override { return 1; }
      double energy(std::span<const double> x) const override { return 0.5 * x[0] * x[0]; }
      void gradient(std::span<const double> x, std::span<double> g) const override {
        g[0] = x[0];
      }
    } f;
    Chain chain;
    chain.temperature = 1.0;
    chain.state = {0.0};
    chain.step_size = 0.3;
    chain.leapfrog_steps = 10;
    Rng rng(9003);
    tune_step_size(chain, f, rng);
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < 100000; ++i) {
      hmc_step(chain, f, rng);
      sum += chain.state[0];
      sum2 += chain.state[0] * chain.state[0];
    }
    const double var = sum2 / 100000 - (sum / 100000) * (sum / 100000);
    const bool ok = std::abs(var - 1.0) <= 0.05;
    pass = pass && ok;
    if (!ok) detail += " gaussian-variance(" + fmt(var) + ")";
  }

  // delta_f metric axioms on random grids
  {
    std::mt19937_64 rng(9004);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    bool ok = true;
    for (int trial = 0; trial < 25; ++trial) {
      DensityGrid a, b, c;
      a.lo = b.lo = c.lo = 0.0;
      a.hi = b.hi = c.hi = 10.0;
      a.values.resize(64);
      b.values.resize(64);
      c.values.resize(64);
      for (std::size_t i = 0; i < 64; ++i) {
        a.values[i] = u(rng);
        b.values[i] = u(rng);
        c.values[i] = u(rng);
      }
      ok = ok && delta_f(a, a) == 0.0;
      ok = ok && std::abs(delta_f(a, b) - delta_f(b, a)) <= 1e-15;
      ok = ok && delta_f(a, c) <= delta_f(a, b) + delta_f(b, c) + 1e-12;
      ok = ok && delta_f(a, b) >= 0.0;
    }
    pass = pass && ok;
    if (!ok) detail += " delta-f-axioms";
  }

  // rmsd invariances and set_torsion single-coordinate property
  {
    const BLNModel model(Sequence::parse("(BL)2B5N3(LB)4N3B9N3(LB)5L"));
    Rng rng(9005);
    const Conformation a = randomize_loops(model.extended(), model, rng);
    Conformation moved = a;
    const double ca = std::cos(0.9), sa = std::sin(0.9);
    for (Vec3& p : moved.positions)
      p = Vec3{ca * p.x - sa * p.y + 1.0, sa * p.x + ca * p.y - 2.0, p.z + 0.5};
    bool ok = rmsd(a, a) == 0.0 && rmsd(a, moved) <= 1e-10;
    const Conformation b = randomize_loops(model.extended(), model, rng);
    ok = ok && std::abs(rmsd(a, b) - rmsd(b, a)) <= 1e-12;

    const auto angle_gap = [](double x, double y) {
      return std::abs(std::remainder(x - y, 2.0 * std::numbers::pi));
    };
    const Conformation twisted = set_torsion(a, 20, 1.0);
    ok = ok && angle_gap(dihedral_angle(twisted, 20), 1.0) <= 1e-10;
    for (std::size_t d = 0; d + 3 < 46; ++d) {
      if (d == 20) continue;
      ok = ok && angle_gap(dihedral_angle(twisted, d), dihedral_angle(a, d)) <= 1e-10;
    }
    for (std::size_t i = 1; i < 46; ++i)
      ok = ok && std::abs(norm(twisted.positions[i] - twisted.positions[i - 1]) -
                          norm(a.positions[i] - a.positions[i - 1])) <= 1e-10;
    pass = pass && ok;
    if (!ok) detail += " rmsd/set-torsion";
  }

  // sequence round trips
  {
    std::mt19937_64 rng(9006);
    std::uniform_int_distribution<int> kind(0, 2), len(1, 50);
    bool ok = true;
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<ResidueKind> kinds(static_cast<std::size_t>(len(rng)));
      for (ResidueKind& k : kinds) k = static_cast<ResidueKind>(kind(rng));
      const Sequence seq(kinds);
      ok = ok && Sequence::parse(seq.render()) == seq;
    }
    pass = pass && ok;
    if (!ok) detail += " parse-round-trip";
  }

  // deltaf trend: seed-averaged window medians fall strictly through the
  // approach phase and at least halve overall, for both samplers
  {
    const BenchData& d = bench_data();
    constexpr std::uint64_t kWindow = 5000;
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return v[v.size() / 2];
    };
    bool ok = true;
    for (const std::string variant : {"ee", "pt"}) {
      std::vector<double> avg;
      int runs = 0;
      for (const VariantRun& run : d.both_cap5000.runs) {
        if (run.variant != variant) continue;
        std::vector<std::vector<double>> windows;
        for (const auto& [sweep, value] : run.deltaf) {
          const std::size_t w = static_cast<std::size_t>((sweep - 1) / kWindow);
          if (windows.size() <= w) windows.resize(w + 1);
          windows[w].push_back(value);
        }
        if (avg.empty()) avg.assign(windows.size(), 0.0);
        for (std::size_t w = 0; w < windows.size(); ++w) avg[w] += median(windows[w]);
        ++runs;
      }
      for (double& v : avg) v /= runs;
      ok = ok && avg.size() >= 12;
      for (std::size_t w = 0; w + 2 < std::min<std::size_t>(avg.size(), 10); ++w)
        ok = ok && avg[w + 2] < avg[w];
      ok = ok && avg.back() < 0.5 * avg.front();
    }
    pass = pass && ok;
    if (!ok) detail += " deltaf-trend";
  }

  // byte-identical reruns of a small benchmark
  {
    ExperimentConfig c = bench_config("rerun_a", ExperimentConfig::Mode::Both, 100);
    c.burnin_sweeps = 100;
    c.production_sweeps = 800;
    c.seeds = {77};
    c.bins = 64;
    run_bench1d(c);
    ExperimentConfig c2 = c;
    c2.output_dir = (work_dir() / "rerun_b").string();
    run_bench1d(c2);
    const auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      return buf.str();
    };
    const bool ok =
        slurp(fs::path(c.output_dir) / "deltaf.csv") ==
            slurp(fs::path(c2.output_dir) / "deltaf.csv") &&
        slurp(fs::path(c.output_dir) / "occupancy.csv") ==
            slurp(fs::path(c2.output_dir) / "occupancy.csv");
    pass = pass && ok;
    if (!ok) detail += " rerun-bytes";
  }

  report(9, "invariant-suites", pass, pass ? "all invariant groups green" : ("failing:" + detail));
}

}  // namespace

int main(int argc, char** argv) {
  bool long_profile = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--long") == 0) long_profile = true;

  std::printf("acceptance suite, work dir %s\n", work_dir().string().c_str());

  if (long_profile) {
    criterion_8_folding_comparison();
  } else {
    criterion_5_analytic_checks();
    criterion_6_gradient_suites();
    criterion_9_invariant_suites();
    criterion_1_acceptance_ratios();
    criterion_2_hmc_tuning();
    criterion_3_convergence_ordering();
    criterion_4_occupancy_pattern();
    criterion_7_protein_ladder();
    std::printf("SKIP criterion-8 (folding-comparison): long profile only; run with --long\n");
  }

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all executed criteria passed\n");
  return 0;
}

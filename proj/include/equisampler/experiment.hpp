#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "equisampler/bln.hpp"
#include "equisampler/sampler.hpp"

namespace eqs {

// Declarative description of one harness run. Parsed from strict JSON:
// unknown keys are rejected, all fields have concrete defaults, and
// parse(render(config)) == config.
struct ExperimentConfig {
  enum class Kind { Bench1d, Quench, Fold };
  enum class Mode { EE, PT, Both };

  Kind kind = Kind::Bench1d;
  Mode mode = Mode::Both;
  std::size_t k = 4;  // non-ground chains; K+1 chains in total

  // Explicit ladders; empty lists fall back to the kind defaults (bench1d)
  // or to the built ladders (fold).
  std::vector<double> temperatures;
  double t_min = 0.14;
  double t_max = 0.38;
  std::vector<double> energy_levels;
  std::string ladder = "scaled";  // "scaled" (ratio-lambda increments) or "naive"
  double lambda = 1.2;

  double p_ee = 0.15;
  double p_swap = 0.15;
  std::size_t ring_cap = 5000;
  std::uint64_t burnin_sweeps = 2000;
  std::uint64_t production_sweeps = 100000;
  int leapfrog_steps = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  // bench1d
  std::size_t bins = 500;
  std::uint64_t deltaf_stride = 200;

  // protein systems
  std::string sequence = "(BL)2B5N3(LB)4N3B9N3(LB)5L";
  std::string torsion_rule = "two_or_more";  // or "more_than_two"

  // fold
  std::size_t initial_structures = 10;
  std::uint64_t snapshot_stride = 10;
  std::string native_file;
  bool sx_all_chains = false;

  // quench campaign
  std::size_t starts = 4;
  std::uint64_t explore_sweeps = 12000;
  std::uint64_t explore_stride = 100;
  double quench_tolerance = 1e-4;

  std::string output_dir = "out";
  int threads = 0;  // 0: EQUISAMPLER_THREADS or 1

  static ExperimentConfig parse_json(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string render_json() const;

  // Table-ladder defaults of the 1D benchmark (applied when the explicit
  // lists are empty and kind is bench1d).
  static const std::vector<double>& bench1d_temperatures();
  static const std::vector<double>& bench1d_energy_levels();

  // Throws std::invalid_argument with a field-specific message.
  void validate() const;

  TorsionRule parsed_torsion_rule() const;
  int effective_threads() const;

  bool operator==(const ExperimentConfig&) const = default;
};

std::string to_string(ExperimentConfig::Kind kind);
std::string to_string(ExperimentConfig::Mode mode);

// One sampler run of one variant under one seed.
struct VariantRun {
  std::string variant;  // "ee" or "pt"
  std::uint64_t seed = 0;
  SweepReport stats;
  std::vector<std::pair<std::uint64_t, double>> deltaf;  // (sweep, delta_f)
};

struct TrajectoryRecord {
  std::size_t index = 0;  // rmsd_traj_<index>.csv
  std::string variant;
  std::size_t start_index = 0;
  std::uint64_t seed = 0;
  double initial_rmsd = 0.0;
  std::vector<std::tuple<std::uint64_t, double, double>> series;  // sweep, rmsd, energy
  SweepReport stats;
};

struct SxCurve {
  std::string variant;
  std::vector<double> x;
  std::vector<double> p;
  double s_15 = 0.0;  // P(1.5)
};

struct QuenchOutcome {
  double h_min = 0.0;
  double h_0 = 0.0;
  double h_unf = 0.0;
  std::string native_path;
  std::size_t best_start = 0;
  std::vector<double> start_energies;  // best quenched energy per start
};

struct RunReport {
  int schema_version = 1;
  ExperimentConfig config;
  double wall_ms = 0.0;
  bool partial = false;  // true when flushed after a runtime failure
  std::vector<std::string> warnings;
  std::vector<VariantRun> runs;
  std::optional<QuenchOutcome> quench;
  std::vector<TrajectoryRecord> trajectories;
  std::vector<SxCurve> sx;
};

// The harness entry points. Each validates its config, runs, and returns the
// report; emit_reports writes the machine-readable files.
RunReport run_bench1d(const ExperimentConfig& config);
RunReport run_quench_campaign(const ExperimentConfig& config);
RunReport run_fold(const ExperimentConfig& config);

// Dispatch on config.kind; writes reports into config.output_dir, flushing a
// partial report when the run aborts.
RunReport run_experiment(const ExperimentConfig& config);

void emit_reports(const RunReport& report, const std::filesystem::path& directory);

// Short human-readable digest printed by the CLI.
std::string report_brief(const RunReport& report);

}  // namespace eqs

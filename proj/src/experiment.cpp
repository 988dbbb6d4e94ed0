#include "equisampler/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "equisampler/bln.hpp"

namespace eqs {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ExperimentConfig::Kind kind_from_string(const std::string& s) {
  if (s == "bench1d") return ExperimentConfig::Kind::Bench1d;
  if (s == "quench") return ExperimentConfig::Kind::Quench;
  if (s == "fold") return ExperimentConfig::Kind::Fold;
  throw std::invalid_argument("config: unknown kind '" + s + "'");
}

ExperimentConfig::Mode mode_from_string(const std::string& s) {
  if (s == "ee") return ExperimentConfig::Mode::EE;
  if (s == "pt") return ExperimentConfig::Mode::PT;
  if (s == "both") return ExperimentConfig::Mode::Both;
  throw std::invalid_argument("config: unknown mode '" + s + "'");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "schema_version", "kind", "mode", "k", "temperatures", "t_min", "t_max",
      "energy_levels", "ladder", "lambda", "p_ee", "p_swap", "ring_cap",
      "burnin_sweeps", "production_sweeps", "leapfrog_steps", "seeds", "bins",
      "deltaf_stride", "sequence", "torsion_rule", "initial_structures",
      "snapshot_stride", "native_file", "sx_all_chains", "starts",
      "explore_sweeps", "explore_stride", "quench_tolerance", "output_dir",
      "threads"};
  return keys;
}

}  // namespace

std::string to_string(ExperimentConfig::Kind kind) {
  switch (kind) {
    case ExperimentConfig::Kind::Bench1d: return "bench1d";
    case ExperimentConfig::Kind::Quench: return "quench";
    default: return "fold";
  }
}

std::string to_string(ExperimentConfig::Mode mode) {
  switch (mode) {
    case ExperimentConfig::Mode::EE: return "ee";
    case ExperimentConfig::Mode::PT: return "pt";
    default: return "both";
  }
}

const std::vector<double>& ExperimentConfig::bench1d_temperatures() {
  static const std::vector<double> t = {1.0, 2.0, 3.9, 7.7, 15.3};
  return t;
}

const std::vector<double>& ExperimentConfig::bench1d_energy_levels() {
  static const std::vector<double> h = {-10.0, -8.7, -7.5, -5.0, -0.2, 10.0};
  return h;
}

ExperimentConfig ExperimentConfig::parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (const auto& item : j.items())
    if (known_keys().find(item.key()) == known_keys().end())
      throw std::invalid_argument("config: unknown field '" + item.key() + "'");

  ExperimentConfig c;
  try {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
      throw std::invalid_argument("config: unsupported schema_version");
    if (!j.contains("kind")) throw std::invalid_argument("config: missing field 'kind'");
    c.kind = kind_from_string(j.at("kind").get<std::string>());
    // Paper-faithful defaults for the 1D benchmark: single-step trajectories
    // and a long equilibration period.
    if (c.kind == Kind::Bench1d) {
      c.leapfrog_steps = 1;
      c.burnin_sweeps = 20000;
    }
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
    if (j.contains("temperatures")) c.temperatures = j.at("temperatures").get<std::vector<double>>();
    if (j.contains("t_min")) c.t_min = j.at("t_min").get<double>();
    if (j.contains("t_max")) c.t_max = j.at("t_max").get<double>();
    if (j.contains("energy_levels")) c.energy_levels = j.at("energy_levels").get<std::vector<double>>();
    if (j.contains("ladder")) c.ladder = j.at("ladder").get<std::string>();
    if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
    if (j.contains("p_ee")) c.p_ee = j.at("p_ee").get<double>();
    c.p_swap = c.p_ee;
    if (j.contains("p_swap")) c.p_swap = j.at("p_swap").get<double>();
    if (j.contains("ring_cap")) c.ring_cap = j.at("ring_cap").get<std::size_t>();
    if (j.contains("burnin_sweeps")) c.burnin_sweeps = j.at("burnin_sweeps").get<std::uint64_t>();
    if (j.contains("production_sweeps"))
      c.production_sweeps = j.at("production_sweeps").get<std::uint64_t>();
    if (j.contains("leapfrog_steps")) c.leapfrog_steps = j.at("leapfrog_steps").get<int>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("bins")) c.bins = j.at("bins").get<std::size_t>();
    if (j.contains("deltaf_stride")) c.deltaf_stride = j.at("deltaf_stride").get<std::uint64_t>();
    if (j.contains("sequence")) c.sequence = j.at("sequence").get<std::string>();
    if (j.contains("torsion_rule")) c.torsion_rule = j.at("torsion_rule").get<std::string>();
    if (j.contains("initial_structures"))
      c.initial_structures = j.at("initial_structures").get<std::size_t>();
    if (j.contains("snapshot_stride"))
      c.snapshot_stride = j.at("snapshot_stride").get<std::uint64_t>();
    if (j.contains("native_file")) c.native_file = j.at("native_file").get<std::string>();
    if (j.contains("sx_all_chains")) c.sx_all_chains = j.at("sx_all_chains").get<bool>();
    if (j.contains("starts")) c.starts = j.at("starts").get<std::size_t>();
    if (j.contains("explore_sweeps")) c.explore_sweeps = j.at("explore_sweeps").get<std::uint64_t>();
    if (j.contains("explore_stride")) c.explore_stride = j.at("explore_stride").get<std::uint64_t>();
    if (j.contains("quench_tolerance")) c.quench_tolerance = j.at("quench_tolerance").get<double>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json(text);
}

std::string ExperimentConfig::render_json() const {
  json j;
  j["schema_version"] = 1;
  j["kind"] = to_string(kind);
  j["mode"] = to_string(mode);
  j["k"] = k;
  j["temperatures"] = temperatures;
  j["t_min"] = t_min;
  j["t_max"] = t_max;
  j["energy_levels"] = energy_levels;
  j["ladder"] = ladder;
  j["lambda"] = lambda;
  j["p_ee"] = p_ee;
  j["p_swap"] = p_swap;
  j["ring_cap"] = ring_cap;
  j["burnin_sweeps"] = burnin_sweeps;
  j["production_sweeps"] = production_sweeps;
  j["leapfrog_steps"] = leapfrog_steps;
  j["seeds"] = seeds;
  j["bins"] = bins;
  j["deltaf_stride"] = deltaf_stride;
  j["sequence"] = sequence;
  j["torsion_rule"] = torsion_rule;
  j["initial_structures"] = initial_structures;
  j["snapshot_stride"] = snapshot_stride;
  j["native_file"] = native_file;
  j["sx_all_chains"] = sx_all_chains;
  j["starts"] = starts;
  j["explore_sweeps"] = explore_sweeps;
  j["explore_stride"] = explore_stride;
  j["quench_tolerance"] = quench_tolerance;
  j["output_dir"] = output_dir;
  j["threads"] = threads;
  return j.dump(2);
}

void ExperimentConfig::validate() const {
  if (k < 1) throw std::invalid_argument("config: k must be at least 1");
  if (!(p_ee > 0.0 && p_ee < 1.0))
    throw std::invalid_argument("config: p_ee must lie in (0,1)");
  if (!(p_swap > 0.0 && p_swap < 1.0))
    throw std::invalid_argument("config: p_swap must lie in (0,1)");
  if (ring_cap == 0) throw std::invalid_argument("config: ring_cap must be positive");
  if (leapfrog_steps < 1)
    throw std::invalid_argument("config: leapfrog_steps must be at least 1");
  if (seeds.empty()) throw std::invalid_argument("config: need at least one seed");
  if (!temperatures.empty()) {
    if (temperatures.size() != k + 1)
      throw std::invalid_argument("config: temperatures must list k+1 values");
    TemperatureLadder check(temperatures);  // validates ordering
  } else if (!(t_min > 0.0 && t_max > t_min)) {
    throw std::invalid_argument("config: need 0 < t_min < t_max");
  }
  if (!energy_levels.empty()) {
    if (energy_levels.size() != k + 2)
      throw std::invalid_argument("config: energy_levels must list k+2 values");
    EnergyLadder check(energy_levels);
  }
  if (ladder != "scaled" && ladder != "naive")
    throw std::invalid_argument("config: ladder must be 'scaled' or 'naive'");
  if (!(lambda > 1.0)) throw std::invalid_argument("config: lambda must exceed 1");
  if (torsion_rule != "two_or_more" && torsion_rule != "more_than_two")
    throw std::invalid_argument("config: torsion_rule must be 'two_or_more' or 'more_than_two'");
  if (kind == Kind::Bench1d && bins < 2)
    throw std::invalid_argument("config: bins must be at least 2");
  if (kind == Kind::Bench1d && deltaf_stride == 0)
    throw std::invalid_argument("config: deltaf_stride must be positive");
  if (kind == Kind::Fold && initial_structures == 0)
    throw std::invalid_argument("config: need at least one initial structure");
  if (kind == Kind::Fold && snapshot_stride == 0)
    throw std::invalid_argument("config: snapshot_stride must be positive");
  if (kind == Kind::Fold && native_file.empty())
    throw std::invalid_argument("config: fold requires native_file");
  if (kind == Kind::Quench && starts == 0)
    throw std::invalid_argument("config: starts must be positive");
  if (!(quench_tolerance > 0.0))
    throw std::invalid_argument("config: quench_tolerance must be positive");
  if (threads < 0) throw std::invalid_argument("config: threads must be non-negative");
  if (kind != Kind::Bench1d) Sequence::parse(sequence);  // fail fast on bad sequences
}

TorsionRule ExperimentConfig::parsed_torsion_rule() const {
  return torsion_rule == "two_or_more" ? TorsionRule::TwoOrMoreNeutral
                                       : TorsionRule::MoreThanTwoNeutral;
}

int ExperimentConfig::effective_threads() const {
  if (threads > 0) return threads;
  if (const char* env = std::getenv("EQUISAMPLER_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

namespace {

json chain_stats_json(const ChainStats& c) {
  json j;
  j["order"] = c.order;
  j["temperature"] = c.temperature;
  j["step_size"] = c.step_size;
  j["hmc_acceptance"] = c.hmc_acceptance;
  j["hmc_attempts"] = c.hmc_attempts;
  j["ee_acceptance"] = c.ee_acceptance;
  j["ee_attempts"] = c.ee_attempts;
  j["ee_unavailable"] = c.ee_unavailable;
  j["pt_acceptance"] = c.pt_acceptance;
  j["pt_attempts"] = c.pt_attempts;
  j["nonfinite_rejects"] = c.nonfinite_rejects;
  j["tune_converged"] = c.tune_converged;
  return j;
}

json sweep_report_json(const SweepReport& r) {
  json j;
  j["mean_hmc_acceptance"] = r.mean_hmc_acceptance;
  j["mean_ee_acceptance"] = r.mean_ee_acceptance;
  j["mean_pt_acceptance"] = r.mean_pt_acceptance;
  j["ee_unavailable_total"] = r.ee_unavailable_total;
  j["chains"] = json::array();
  for (const ChainStats& c : r.chains) j["chains"].push_back(chain_stats_json(c));
  if (!r.ring_insertions.empty()) j["ring_insertions"] = r.ring_insertions;
  if (!r.ring_sizes.empty()) j["ring_sizes"] = r.ring_sizes;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void emit_reports(const RunReport& report, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const ExperimentConfig& cfg = report.config;

  json summary;
  summary["schema_version"] = report.schema_version;
  summary["kind"] = to_string(cfg.kind);
  summary["config"] = json::parse(cfg.render_json());
  summary["wall_ms"] = report.wall_ms;
  summary["partial"] = report.partial;
  summary["warnings"] = report.warnings;
  summary["runs"] = json::array();
  for (const VariantRun& run : report.runs) {
    json j;
    j["variant"] = run.variant;
    j["seed"] = run.seed;
    j["stats"] = sweep_report_json(run.stats);
    if (!run.deltaf.empty()) j["final_deltaf"] = run.deltaf.back().second;
    summary["runs"].push_back(j);
  }
  if (report.quench) {
    json q;
    q["h_min"] = report.quench->h_min;
    q["h_0"] = report.quench->h_0;
    q["h_unf"] = report.quench->h_unf;
    q["native_file"] = report.quench->native_path;
    q["best_start"] = report.quench->best_start;
    q["start_energies"] = report.quench->start_energies;
    summary["quench"] = q;
  }
  if (!report.trajectories.empty() || cfg.kind == ExperimentConfig::Kind::Fold) {
    json trajs = json::array();
    for (const TrajectoryRecord& t : report.trajectories) {
      json j;
      j["index"] = t.index;
      j["variant"] = t.variant;
      j["start_index"] = t.start_index;
      j["seed"] = t.seed;
      j["initial_rmsd"] = t.initial_rmsd;
      j["file"] = "rmsd_traj_" + std::to_string(t.index) + ".csv";
      j["stats"] = sweep_report_json(t.stats);
      trajs.push_back(j);
    }
    summary["trajectories"] = trajs;
    json sx = json::object();
    for (const SxCurve& c : report.sx) sx[c.variant] = {{"s_1.5", c.s_15}};
    summary["sx"] = sx;
  }
  write_file(directory / "summary.json", summary.dump(2) + "\n");

  if (cfg.kind == ExperimentConfig::Kind::Bench1d) {
    std::string deltaf = "sweep,variant,seed,deltaf\n";
    for (const VariantRun& run : report.runs)
      for (const auto& [sweep, df] : run.deltaf)
        deltaf += std::to_string(sweep) + "," + run.variant + "," +
                  std::to_string(run.seed) + "," + fmt17(df) + "\n";
    write_file(directory / "deltaf.csv", deltaf);

    std::string occupancy = "chain,ring,count\n";
    for (const VariantRun& run : report.runs) {
      if (run.variant != "ee" || run.stats.ring_insertions.empty()) continue;
      for (std::size_t chain = 0; chain < run.stats.ring_insertions.size(); ++chain)
        for (std::size_t ring = 0; ring < run.stats.ring_insertions[chain].size(); ++ring)
          occupancy += std::to_string(chain) + "," + std::to_string(ring) + "," +
                       std::to_string(run.stats.ring_insertions[chain][ring]) + "\n";
      break;  // first EE run only; per-seed matrices live in summary.json
    }
    write_file(directory / "occupancy.csv", occupancy);
  }

  if (cfg.kind == ExperimentConfig::Kind::Fold) {
    for (const TrajectoryRecord& t : report.trajectories) {
      std::string rows = "sweep,rmsd,energy\n";
      for (const auto& [sweep, r, e] : t.series)
        rows += std::to_string(sweep) + "," + fmt17(r) + "," + fmt17(e) + "\n";
      write_file(directory / ("rmsd_traj_" + std::to_string(t.index) + ".csv"), rows);
    }
    std::string sx = "x,variant,p\n";
    for (const SxCurve& c : report.sx)
      for (std::size_t i = 0; i < c.x.size(); ++i)
        sx += fmt17(c.x[i]) + "," + c.variant + "," + fmt17(c.p[i]) + "\n";
    write_file(directory / "sx_curve.csv", sx);
  }
}

std::string report_brief(const RunReport& report) {
  std::string out;
  char line[256];
  for (const VariantRun& run : report.runs) {
    std::snprintf(line, sizeof(line),
                  "%s seed %llu: hmc %.3f  ee %.3f  pt %.3f%s\n", run.variant.c_str(),
                  static_cast<unsigned long long>(run.seed),
                  run.stats.mean_hmc_acceptance, run.stats.mean_ee_acceptance,
                  run.stats.mean_pt_acceptance,
                  run.deltaf.empty() ? ""
                                     : ("  deltaf " + fmt17(run.deltaf.back().second)).c_str());
    out += line;
  }
  if (report.quench) {
    std::snprintf(line, sizeof(line), "h_min %.6f  H_0 %.6f  h_unf %.6f  native %s\n",
                  report.quench->h_min, report.quench->h_0, report.quench->h_unf,
                  report.quench->native_path.c_str());
    out += line;
  }
  for (const SxCurve& c : report.sx) {
    std::snprintf(line, sizeof(line), "%s: P(1.5) = %.4f\n", c.variant.c_str(), c.s_15);
    out += line;
  }
  if (report.partial) out += "run aborted; partial report\n";
  return out;
}

}  // namespace eqs

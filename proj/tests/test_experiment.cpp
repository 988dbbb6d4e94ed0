#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "equisampler/experiment.hpp"

using namespace eqs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("eqs_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig small_bench(const fs::path& out) {
  ExperimentConfig c;
  c.kind = ExperimentConfig::Kind::Bench1d;
  c.mode = ExperimentConfig::Mode::Both;
  c.seeds = {11};
  c.burnin_sweeps = 200;
  c.production_sweeps = 1500;
  c.ring_cap = 200;
  c.bins = 100;
  c.deltaf_stride = 250;
  c.output_dir = out.string();
  return c;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char ch : text)
    if (ch == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("config json round-trips and rejects unknown or malformed fields") {
  ExperimentConfig c = small_bench("/tmp/x");
  c.temperatures = {1.0, 2.0, 3.9, 7.7, 15.3};
  c.energy_levels = {-10.0, -8.7, -7.5, -5.0, -0.2, 10.0};
  const ExperimentConfig back = ExperimentConfig::parse_json(c.render_json());
  CHECK(back == c);

  CHECK_THROWS_AS(ExperimentConfig::parse_json("{\"kind\":\"bench1d\",\"bogus\":1}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::parse_json("{\"mode\":\"both\"}"),
                  std::invalid_argument);  // kind missing
  CHECK_THROWS_AS(ExperimentConfig::parse_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::parse_json("{\"kind\":\"bench1d\",\"p_ee\":1.5}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::parse_json("{\"kind\":\"fold\"}"),
                  std::invalid_argument);  // fold without native_file
  CHECK_THROWS_AS(
      ExperimentConfig::parse_json("{\"kind\":\"bench1d\",\"temperatures\":[2.0,1.0]}"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::parse_json("{\"kind\":\"quench\",\"sequence\":\"(B)0\"}"),
      std::invalid_argument);
}

TEST_CASE("zero production sweeps produce a valid empty report with headers") {
  const fs::path out = temp_dir("empty");
  ExperimentConfig c = small_bench(out);
  c.production_sweeps = 0;
  c.burnin_sweeps = 20;
  const RunReport report = run_bench1d(c);
  CHECK(report.runs.size() == 2);
  for (const VariantRun& run : report.runs) CHECK(run.deltaf.empty());

  CHECK(slurp(out / "deltaf.csv") == "sweep,variant,seed,deltaf\n");
  const std::string occupancy = slurp(out / "occupancy.csv");
  CHECK(occupancy.substr(0, 17) == "chain,ring,count\n");
  CHECK(fs::exists(out / "summary.json"));
}

TEST_CASE("bench1d emits the table-shaped occupancy file and deltaf series") {
  const fs::path out = temp_dir("bench");
  const ExperimentConfig c = small_bench(out);
  const RunReport report = run_bench1d(c);

  // one EE and one PT run for the single seed
  REQUIRE(report.runs.size() == 2);
  CHECK(report.runs[0].variant == "ee");
  CHECK(report.runs[1].variant == "pt");
  CHECK(report.runs[0].deltaf.size() == 1500 / 250);

  // occupancy.csv: header + 5 chains x 5 rings
  const std::string occupancy = slurp(out / "occupancy.csv");
  CHECK(count_lines(occupancy) == 1 + 25);

  // stored ring sizes respect the cap; insertion rows sum to the production count
  const SweepReport& ee = report.runs[0].stats;
  for (std::size_t chain = 0; chain < 5; ++chain) {
    std::uint64_t row = 0;
    for (std::uint64_t v : ee.ring_insertions[chain]) row += v;
    CHECK(row == c.production_sweeps);
  }
  for (std::size_t chain = 1; chain < 5; ++chain)
    for (std::size_t ring = 0; ring < 5; ++ring)
      CHECK(ee.ring_sizes[chain][ring] <= c.ring_cap);
}

TEST_CASE("identical seeds give byte-identical report files, different seeds differ") {
  const fs::path out1 = temp_dir("det1");
  const fs::path out2 = temp_dir("det2");
  const fs::path out3 = temp_dir("det3");

  ExperimentConfig c = small_bench(out1);
  run_bench1d(c);
  c.output_dir = out2.string();
  run_bench1d(c);
  c.output_dir = out3.string();
  c.seeds = {12};
  run_bench1d(c);

  CHECK(slurp(out1 / "deltaf.csv") == slurp(out2 / "deltaf.csv"));
  CHECK(slurp(out1 / "occupancy.csv") == slurp(out2 / "occupancy.csv"));
  CHECK(slurp(out1 / "deltaf.csv") != slurp(out3 / "deltaf.csv"));
}

TEST_CASE("fold runs share initial structures between variants and emit trajectories") {
  // quick campaign substitute: any clearly negative local minimum serves as
  // the reference
  const BLNModel model(Sequence::parse("(BL)2B5N3(LB)4N3B9N3(LB)5L"));
  QuenchResult q{model.extended()};
  for (std::uint64_t seed = 1; seed < 40; ++seed) {
    Rng rng(seed * 31 + 7);
    const Conformation start = randomize_loops(model.extended(), model, rng);
    q = quench(model, start, 1e-2, 4000);
    if (q.energy < -5.0) break;
  }
  REQUIRE(q.energy < -5.0);

  const fs::path out = temp_dir("fold");
  const fs::path native = out / "native.xyz";
  write_xyz_file(native, q.conformation, "test reference");

  ExperimentConfig c;
  c.kind = ExperimentConfig::Kind::Fold;
  c.mode = ExperimentConfig::Mode::Both;
  c.k = 3;
  c.t_min = 0.4;
  c.t_max = 1.2;
  c.seeds = {5};
  c.burnin_sweeps = 30;
  c.production_sweeps = 120;
  c.ring_cap = 50;
  c.initial_structures = 2;
  c.snapshot_stride = 20;
  c.native_file = native.string();
  c.output_dir = out.string();

  const RunReport report = run_fold(c);
  REQUIRE(report.trajectories.size() == 4);  // 2 starts x 2 variants
  CHECK(report.trajectories[0].variant == "ee");
  CHECK(report.trajectories[1].variant == "pt");
  // paired variants start from the same structure and seed
  CHECK(report.trajectories[0].seed == report.trajectories[1].seed);
  CHECK(report.trajectories[0].initial_rmsd ==
        doctest::Approx(report.trajectories[1].initial_rmsd));
  CHECK(std::get<1>(report.trajectories[0].series[0]) ==
        doctest::Approx(std::get<1>(report.trajectories[1].series[0])).epsilon(0.2));

  for (const TrajectoryRecord& t : report.trajectories) {
    CHECK(t.series.size() == 120 / 20);
    CHECK(fs::exists(out / ("rmsd_traj_" + std::to_string(t.index) + ".csv")));
  }
  REQUIRE(report.sx.size() == 2);
  CHECK(report.sx[0].x.size() == 40);
  CHECK(report.sx[0].x.front() == 0.25);
  CHECK(report.sx[0].x.back() == 10.0);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(report.sx[0].p[i] >= 0.0);
    CHECK(report.sx[0].p[i] <= 1.0);
    if (i > 0) CHECK(report.sx[0].p[i] >= report.sx[0].p[i - 1]);  // cumulative
  }
  CHECK(fs::exists(out / "sx_curve.csv"));

  // a trajectory started at the native structure has zero initial RMSD
  ExperimentConfig at_native = c;
  at_native.output_dir = (out / "at_native").string();
  at_native.mode = ExperimentConfig::Mode::EE;
  at_native.initial_structures = 1;
  at_native.production_sweeps = 40;
  // randomize_loops leaves a loop-free chain alone, so fake it by passing the
  // native itself through a fresh report
  const RunReport rep2 = run_fold(at_native);
  CHECK(rep2.trajectories[0].initial_rmsd > 0.0);  // loops are randomized

  ExperimentConfig bad = c;
  bad.native_file = (out / "missing.xyz").string();
  CHECK_THROWS_AS(run_fold(bad), std::invalid_argument);
}

TEST_CASE("a loop-free chain starts fold trajectories exactly at the reference") {
  const fs::path out = temp_dir("foldb8");
  const BLNModel model(Sequence::parse("B8"));
  const fs::path native = out / "native.xyz";
  write_xyz_file(native, model.extended(), "rigid reference");

  ExperimentConfig c;
  c.kind = ExperimentConfig::Kind::Fold;
  c.mode = ExperimentConfig::Mode::EE;
  c.k = 2;
  c.t_min = 0.2;
  c.t_max = 0.5;
  c.sequence = "B8";
  c.seeds = {9};
  c.burnin_sweeps = 10;
  c.production_sweeps = 30;
  c.ring_cap = 20;
  c.initial_structures = 1;
  c.snapshot_stride = 10;
  c.native_file = native.string();
  c.output_dir = out.string();

  const RunReport rep = run_fold(c);
  CHECK(rep.trajectories[0].initial_rmsd == 0.0);
}

TEST_CASE("thread cap resolves config, environment, then one") {
  ExperimentConfig c = small_bench("/tmp/unused");
  c.threads = 3;
  CHECK(c.effective_threads() == 3);
  c.threads = 0;
  setenv("EQUISAMPLER_THREADS", "5", 1);
  CHECK(c.effective_threads() == 5);
  unsetenv("EQUISAMPLER_THREADS");
  CHECK(c.effective_threads() == 1);
}

TEST_CASE("kind dispatch rejects mismatched runner calls") {
  ExperimentConfig c = small_bench("/tmp/unused");
  CHECK_THROWS_AS(run_fold(c), std::invalid_argument);
  CHECK_THROWS_AS(run_quench_campaign(c), std::invalid_argument);
}

// Command-line harness for the equisampler shared library. Talks to the
// library exclusively through its C interface.

#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "equisampler.h"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string mode;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "experiment configuration (JSON)")
      ->required();
  cmd->add_option("--out", opt.out_dir, "output directory (overrides the config)");
  cmd->add_option("--mode", opt.mode, "sampler selection: ee, pt or both")
      ->check(CLI::IsMember({"ee", "pt", "both"}));
  auto* seed = cmd->add_option("--seed", opt.seed, "seed override (replaces the seed list)");
  cmd->callback([&opt, seed] { opt.seed_set = seed->count() > 0; });
  cmd->add_option("--threads", opt.threads,
                  "parallel trajectories (default: EQUISAMPLER_THREADS or 1)");
}

int run(const CommonOptions& opt, const char* expected_kind) {
  eqs_experiment* exp = nullptr;
  eqs_status rc = eqs_experiment_open(opt.config_path.c_str(), &exp);
  if (rc != EQS_OK) {
    std::fprintf(stderr, "error: %s\n", eqs_last_error());
    return kExitConfigError;
  }

  if (std::string(eqs_experiment_kind(exp)) != expected_kind) {
    std::fprintf(stderr, "error: config kind '%s' does not match subcommand '%s'\n",
                 eqs_experiment_kind(exp), expected_kind);
    eqs_experiment_close(exp);
    return kExitConfigError;
  }

  if (opt.seed_set) rc = eqs_experiment_set_seed(exp, opt.seed);
  if (rc == EQS_OK && !opt.mode.empty()) rc = eqs_experiment_set_mode(exp, opt.mode.c_str());
  if (rc == EQS_OK && !opt.out_dir.empty())
    rc = eqs_experiment_set_output_dir(exp, opt.out_dir.c_str());
  if (rc == EQS_OK && opt.threads >= 0) rc = eqs_experiment_set_threads(exp, opt.threads);
  if (rc != EQS_OK) {
    std::fprintf(stderr, "error: %s\n", eqs_last_error());
    eqs_experiment_close(exp);
    return kExitConfigError;
  }

  rc = eqs_experiment_run(exp);
  if (rc != EQS_OK) {
    std::fprintf(stderr, "error: %s\n", eqs_last_error());
    eqs_experiment_close(exp);
    return rc == EQS_ERR_INVALID_ARGUMENT ? kExitConfigError : kExitRuntimeError;
  }

  std::printf("%s", eqs_experiment_brief(exp));
  eqs_experiment_close(exp);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equi-energy / parallel-tempering sampling benchmarks"};
  app.set_version_flag("--version", std::string(eqs_version()));
  app.require_subcommand(1);

  CommonOptions bench_opt, quench_opt, fold_opt;
  CLI::App* bench = app.add_subcommand(
      "bench1d", "rough 1D landscape: convergence and ring occupancy");
  add_common(bench, bench_opt);
  CLI::App* quench = app.add_subcommand(
      "quench", "minimization campaign producing the native reference");
  add_common(quench, quench_opt);
  CLI::App* fold = app.add_subcommand("fold", "bead-chain folding comparison");
  add_common(fold, fold_opt);

  CLI11_PARSE(app, argc, argv);

  if (bench->parsed()) return run(bench_opt, "bench1d");
  if (quench->parsed()) return run(quench_opt, "quench");
  return run(fold_opt, "fold");
}

#include "equisampler.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>

#include "equisampler/bln.hpp"
#include "equisampler/experiment.hpp"
#include "equisampler/landscape1d.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const char* what) { g_last_error = what != nullptr ? what : "unknown error"; }

eqs_status classify(const std::exception& e) {
  set_error(e.what());
  if (dynamic_cast<const std::invalid_argument*>(&e) != nullptr)
    return EQS_ERR_INVALID_ARGUMENT;
  return EQS_ERR_RUNTIME;
}

template <typename F>
eqs_status guarded(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return classify(e);
  } catch (...) {
    set_error("unknown error");
    return EQS_ERR_RUNTIME;
  }
}

}  // namespace

struct eqs_experiment {
  eqs::ExperimentConfig config;
  bool ran = false;
  std::string config_json;  // materialized on demand
  std::string brief;
};

struct eqs_landscape1d {
  eqs::FourierLandscape landscape;
};

struct eqs_bln {
  eqs::BLNModel model;
};

extern "C" {

const char* eqs_version(void) {
#ifdef EQS_VERSION_STRING
  return EQS_VERSION_STRING;
#else
  return "0.0.0";
#endif
}

const char* eqs_last_error(void) { return g_last_error.c_str(); }

eqs_status eqs_experiment_open(const char* config_path, eqs_experiment** out) {
  if (config_path == nullptr || out == nullptr) {
    set_error("null argument");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&]() -> eqs_status {
    if (!std::filesystem::exists(config_path)) {
      set_error(("config file not found: " + std::string(config_path)).c_str());
      return EQS_ERR_IO;
    }
    auto* e = new eqs_experiment{eqs::ExperimentConfig::load(config_path), false, {}, {}};
    *out = e;
    return EQS_OK;
  });
}

eqs_status eqs_experiment_open_json(const char* json_text, eqs_experiment** out) {
  if (json_text == nullptr || out == nullptr) {
    set_error("null argument");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&]() -> eqs_status {
    auto* e = new eqs_experiment{eqs::ExperimentConfig::parse_json(json_text), false, {}, {}};
    *out = e;
    return EQS_OK;
  });
}

const char* eqs_experiment_kind(const eqs_experiment* e) {
  if (e == nullptr) return "";
  static thread_local std::string kind;
  kind = eqs::to_string(e->config.kind);
  return kind.c_str();
}

eqs_status eqs_experiment_set_seed(eqs_experiment* e, uint64_t seed) {
  if (e == nullptr) {
    set_error("null handle");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  e->config.seeds = {seed};
  return EQS_OK;
}

eqs_status eqs_experiment_set_mode(eqs_experiment* e, const char* mode) {
  if (e == nullptr || mode == nullptr) {
    set_error("null argument");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  const std::string m = mode;
  if (m == "ee")
    e->config.mode = eqs::ExperimentConfig::Mode::EE;
  else if (m == "pt")
    e->config.mode = eqs::ExperimentConfig::Mode::PT;
  else if (m == "both")
    e->config.mode = eqs::ExperimentConfig::Mode::Both;
  else {
    set_error(("unknown mode '" + m + "'").c_str());
    return EQS_ERR_INVALID_ARGUMENT;
  }
  return EQS_OK;
}

eqs_status eqs_experiment_set_output_dir(eqs_experiment* e, const char* dir) {
  if (e == nullptr || dir == nullptr) {
    set_error("null argument");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  e->config.output_dir = dir;
  return EQS_OK;
}

eqs_status eqs_experiment_set_threads(eqs_experiment* e, int threads) {
  if (e == nullptr || threads < 0) {
    set_error("threads must be non-negative");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  e->config.threads = threads;
  return EQS_OK;
}

eqs_status eqs_experiment_run(eqs_experiment* e) {
  if (e == nullptr) {
    set_error("null handle");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  return guarded([&]() -> eqs_status {
    const eqs::RunReport report = eqs::run_experiment(e->config);
    e->brief = eqs::report_brief(report);
    e->ran = true;
    return EQS_OK;
  });
}

const char* eqs_experiment_config_json(const eqs_experiment* e) {
  if (e == nullptr) return "";
  auto* mutable_e = const_cast<eqs_experiment*>(e);
  mutable_e->config_json = e->config.render_json();
  return mutable_e->config_json.c_str();
}

const char* eqs_experiment_brief(const eqs_experiment* e) {
  return e != nullptr && e->ran ? e->brief.c_str() : "";
}

void eqs_experiment_close(eqs_experiment* e) { delete e; }

eqs_landscape1d* eqs_landscape1d_create(void) {
  return new eqs_landscape1d{eqs::FourierLandscape()};
}

double eqs_landscape1d_energy(const eqs_landscape1d* l, double x) {
  return l->landscape.h(x);
}

double eqs_landscape1d_gradient(const eqs_landscape1d* l, double x) {
  return l->landscape.dh(x);
}

double eqs_landscape1d_normalization(const eqs_landscape1d* l) {
  return l->landscape.normalization();
}

double eqs_landscape1d_period(const eqs_landscape1d* l) {
  return l->landscape.period_length();
}

void eqs_landscape1d_destroy(eqs_landscape1d* l) { delete l; }

eqs_status eqs_bln_create(const char* sequence, eqs_bln** out) {
  if (sequence == nullptr || out == nullptr) {
    set_error("null argument");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&]() -> eqs_status {
    *out = new eqs_bln{eqs::BLNModel(eqs::Sequence::parse(sequence))};
    return EQS_OK;
  });
}

int eqs_bln_bead_count(const eqs_bln* m) {
  return m == nullptr ? 0 : static_cast<int>(m->model.bead_count());
}

eqs_status eqs_bln_energy(const eqs_bln* m, const double* xyz, double* energy_out) {
  if (m == nullptr || xyz == nullptr || energy_out == nullptr) {
    set_error("null argument");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  *energy_out = m->model.energy(std::span<const double>(xyz, 3 * m->model.bead_count()));
  return EQS_OK;
}

eqs_status eqs_bln_gradient(const eqs_bln* m, const double* xyz, double* grad_out) {
  if (m == nullptr || xyz == nullptr || grad_out == nullptr) {
    set_error("null argument");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  const std::size_t dim = 3 * m->model.bead_count();
  m->model.gradient(std::span<const double>(xyz, dim), std::span<double>(grad_out, dim));
  return EQS_OK;
}

double eqs_bln_unfolded_energy(const eqs_bln* m) {
  return m == nullptr ? 0.0 : m->model.unfolded_energy();
}

eqs_status eqs_bln_rmsd(int n, const double* xyz_a, const double* xyz_b, double* rmsd_out) {
  if (n <= 0 || xyz_a == nullptr || xyz_b == nullptr || rmsd_out == nullptr) {
    set_error("null argument or non-positive length");
    return EQS_ERR_INVALID_ARGUMENT;
  }
  return guarded([&]() -> eqs_status {
    std::vector<eqs::ResidueKind> kinds(static_cast<std::size_t>(n), eqs::ResidueKind::B);
    eqs::Conformation a{eqs::Sequence(kinds), {}};
    eqs::Conformation b{eqs::Sequence(kinds), {}};
    a.positions.resize(n);
    b.positions.resize(n);
    for (int i = 0; i < n; ++i) {
      a.positions[i] = {xyz_a[3 * i], xyz_a[3 * i + 1], xyz_a[3 * i + 2]};
      b.positions[i] = {xyz_b[3 * i], xyz_b[3 * i + 1], xyz_b[3 * i + 2]};
    }
    *rmsd_out = eqs::rmsd(a, b);
    return EQS_OK;
  });
}

void eqs_bln_destroy(eqs_bln* m) { delete m; }

}  // extern "C"

/* C interface of the equisampler shared library.
 *
 * All entry points are thread-safe as long as a handle is used by one thread
 * at a time. Functions returning eqs_status set a thread-local error message
 * readable via eqs_last_error() on failure.
 */
#ifndef EQUISAMPLER_H
#define EQUISAMPLER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eqs_status {
  EQS_OK = 0,
  EQS_ERR_INVALID_ARGUMENT = 1, /* bad parameter or malformed configuration */
  EQS_ERR_IO = 2,               /* file could not be read or written */
  EQS_ERR_RUNTIME = 3           /*failure after a run started */
} eqs_status;

const char* eqs_version(void);

/* Message describing the most recent failure on this thread; never NULL. */
const char* eqs_last_error(void);

/* ---- experiments ------------------------------------------------------- */

typedef struct eqs_experiment eqs_experiment;

/* Loads a JSON experiment configuration from a file. */
eqs_status eqs_experiment_open(const char* config_path, eqs_experiment** out);
/* Parses a JSON experiment configuration from a string. */
eqs_status eqs_experiment_open_json(const char* json_text, eqs_experiment** out);

/* "bench1d", "quench" or "fold". */
const char* eqs_experiment_kind(const eqs_experiment* e);

/* Overrides applied before the run. Mode is "ee", "pt" or "both". */
eqs_status eqs_experiment_set_seed(eqs_experiment* e, uint64_t seed);
eqs_status eqs_experiment_set_mode(eqs_experiment* e, const char* mode);
eqs_status eqs_experiment_set_output_dir(eqs_experiment* e, const char* dir);
eqs_status eqs_experiment_set_threads(eqs_experiment* e, int threads);

/* Runs the experiment and writes the report files into the output directory.
 * On EQS_ERR_RUNTIME a partial report has been flushed when possible. */
eqs_status eqs_experiment_run(eqs_experiment* e);

/* Configuration echo (JSON) and, after a successful run, a short text digest.
 * Pointers stay valid until the next call on the same handle. */
const char* eqs_experiment_config_json(const eqs_experiment* e);
const char* eqs_experiment_brief(const eqs_experiment* e);

void eqs_experiment_close(eqs_experiment* e);

/* ---- 1D benchmark landscape -------------------------------------------- */

typedef struct eqs_landscape1d eqs_landscape1d;

eqs_landscape1d* eqs_landscape1d_create(void); /* the 20-harmonic benchmark */
double eqs_landscape1d_energy(const eqs_landscape1d* l, double x);
double eqs_landscape1d_gradient(const eqs_landscape1d* l, double x);
double eqs_landscape1d_normalization(const eqs_landscape1d* l);
double eqs_landscape1d_period(const eqs_landscape1d* l);
void eqs_landscape1d_destroy(eqs_landscape1d* l);

/* ---- bead-chain protein model ------------------------------------------ */

typedef struct eqs_bln eqs_bln;

/* sequence uses the run-length grammar, e.g. "(BL)2B5N3(LB)4N3B9N3(LB)5L". */
eqs_status eqs_bln_create(const char* sequence, eqs_bln** out);
int eqs_bln_bead_count(const eqs_bln* m);
/* xyz is bead-major: x0 y0 z0 x1 y1 z1 ... (3 * bead_count doubles). */
eqs_status eqs_bln_energy(const eqs_bln* m, const double* xyz, double* energy_out);
eqs_status eqs_bln_gradient(const eqs_bln* m, const double* xyz, double* grad_out);
double eqs_bln_unfolded_energy(const eqs_bln* m);
/* Minimum RMSD over rigid motions between two bead sets of length n. */
eqs_status eqs_bln_rmsd(int n, const double* xyz_a, const double* xyz_b, double* rmsd_out);
void eqs_bln_destroy(eqs_bln* m);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EQUISAMPLER_H */

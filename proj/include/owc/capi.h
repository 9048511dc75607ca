/* C API for the optical-wireless-channel (owc) resource-allocation library.
 *
 * All functions return an owc_status; OWC_OK is 0. On failure the thread-local
 * message from owc_last_error() describes what went wrong. Out-parameters are
 * only written on success. Objects returned through handle out-parameters must
 * be released with the matching *_free function; strings returned through
 * char** with owc_string_free. All handles are opaque and immutable once
 * created, so they may be shared across threads.
 */
#ifndef OWC_CAPI_H
#define OWC_CAPI_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum owc_status {
  OWC_OK = 0,
  OWC_ERR_INVALID_PARAMETER = 1,
  OWC_ERR_DEGENERATE_GEOMETRY = 2,
  OWC_ERR_UNSUPPORTED_CONFIGURATION = 3,
  OWC_ERR_INVALID_ALLOCATION = 4,
  OWC_ERR_INFEASIBLE = 5,
  OWC_ERR_PROBLEM_TOO_LARGE = 6,
  OWC_ERR_DECODE_FAILURE = 7,
  OWC_ERR_PARSE = 8,
  OWC_ERR_NUMERIC = 9,
  OWC_ERR_TRAINING_FAILURE = 10,
  OWC_ERR_IO = 11,
  OWC_ERR_INTERNAL = 12
} owc_status;

/* Thread-local message for the most recent failing call on this thread. */
const char* owc_last_error(void);
const char* owc_status_name(owc_status status);
const char* owc_version(void);
void owc_string_free(char* s);

/* ---- configuration ----------------------------------------------------- */
/* A config is a set of section.key = value entries ([room], [channel],
 * [solver], [surrogate], [experiments]); unset keys fall back to defaults. */
typedef struct owc_config owc_config;

owc_status owc_config_create(owc_config** out);
owc_status owc_config_load(const char* path, owc_config** out);
/* key is "section.key", e.g. "solver.tol" or "channel.beam_waist_um". */
owc_status owc_config_set(owc_config* cfg, const char* key, const char* value);
void owc_config_free(owc_config* cfg);

/* ---- allocation problems and solutions --------------------------------- */
typedef struct owc_problem owc_problem;
typedef struct owc_solution owc_solution;

/* Structured-text problem file: K, L, rate matrix, bounds, capacities. */
owc_status owc_problem_read(const char* path, owc_problem** out);
owc_status owc_problem_dims(const owc_problem* p, int* num_users, int* num_aps);
void owc_problem_free(owc_problem* p);

/* method: "dual", "exhaustive" or "uniform". cfg may be NULL for defaults. */
owc_status owc_solve(const owc_problem* p, const owc_config* cfg,
                     const char* method, owc_solution** out);

owc_status owc_solution_info(const owc_solution* s, double* utility,
                             int* feasible, long* iterations);
/* Copies the K x L allocation row-major into buf (capacity in doubles). */
owc_status owc_solution_allocation(const owc_solution* s, double* buf,
                                   long buf_len);
/* Writes the allocation matrix CSV and, when trace_csv is non-NULL, the
 * solver trace (iter, utility, max_violation). */
owc_status owc_solution_write_csv(const owc_solution* s, const char* alloc_csv,
                                  const char* trace_csv);
void owc_solution_free(owc_solution* s);

/* ---- blind interference alignment -------------------------------------- */
/* Builds the (L,K) supersymbol, runs `draws` random noiseless end-to-end
 * decode simulations and reports the worst reconstruction residual. */
owc_status owc_verify_bia(int num_aps, int num_users, int draws, uint64_t seed,
                          double* max_residual);
/* Human-readable slot-by-slot supersymbol plan. */
owc_status owc_supersymbol_describe(int num_aps, int num_users, char** out);

/* ---- dataset generation and the neural surrogate ------------------------ */
typedef struct owc_model owc_model;

/* Samples `count` scenarios from the config, labels them with the dual
 * solver, writes the CSV. Reports how many infeasible draws were dropped. */
owc_status owc_gen_dataset(const owc_config* cfg, long count, uint64_t seed,
                           const char* out_csv, long* dropped);

/* Trains on a dataset CSV using the [surrogate] config section (arch, epochs,
 * lr, batch, momentum, seed, output_layout); writes the weights file and,
 * when history_csv is non-NULL, per-epoch train/val MSE. */
owc_status owc_train(const owc_config* cfg, const char* dataset_csv,
                     const char* weights_out, const char* history_csv);

owc_status owc_model_load(const char* path, owc_model** out);
void owc_model_free(owc_model* m);

/* Forward pass + feasibility repair + `refine_iters` warm-started dual
 * iterations on a problem read with owc_problem_read. */
owc_status owc_predict(const owc_model* m, const owc_problem* p,
                       long refine_iters, const owc_config* cfg,
                       owc_solution** out);

/* ---- experiment harness -------------------------------------------------*/
/* Each writes its CSV under out_dir and returns the path via out_csv. */
owc_status owc_run_training_curves(const owc_config* cfg, const char* out_dir,
                                   char** out_csv);
owc_status owc_run_beamwaist_sweep(const owc_config* cfg, const char* out_dir,
                                   char** out_csv);
owc_status owc_run_cdf(const owc_config* cfg, const char* out_dir,
                       char** out_csv);
/* Renders SVG plots for every known experiment CSV found in csv_dir. */
owc_status owc_emit_report(const char* csv_dir, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* OWC_CAPI_H */

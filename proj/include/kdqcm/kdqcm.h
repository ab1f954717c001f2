#ifndef KDQCM_H
#define KDQCM_H

#include <stddef.h>

#if defined(_WIN32)
#define KDQ_API __declspec(dllexport)
#else
#define KDQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kdq_status {
  KDQ_OK = 0,
  KDQ_ERR_INVALID_ARGUMENT = 1,
  KDQ_ERR_DIMENSION_MISMATCH = 2,
  KDQ_ERR_MODE_MISMATCH = 3,
  KDQ_ERR_BOUND_VIOLATION = 4,
  KDQ_ERR_CONFIG = 5,
  KDQ_ERR_IO = 6,
  KDQ_ERR_NUMERIC = 7,
  KDQ_ERR_INTERNAL = 99
} kdq_status;

typedef enum kdq_mode { KDQ_MODE_EXACT = 0, KDQ_MODE_WEAK = 1 } kdq_mode;

typedef enum kdq_quantity {
  KDQ_US = 0,
  KDQ_UA = 1,
  KDQ_USA = 2,
  KDQ_W = 3,
  KDQ_Q = 4,
  KDQ_WS = 5,
  KDQ_QS = 6
} kdq_quantity;

typedef struct kdq_complex {
  double re;
  double im;
} kdq_complex;

/* Row-major 2x2 density matrix of the system. */
typedef struct kdq_state {
  kdq_complex m[4];
} kdq_state;

typedef struct kdq_model_params {
  double omega_s;
  double omega_a;
  double g;
  double tau;
  double beta;
  double lambda;       /* exact mode */
  double lambda_tilde; /* weak mode */
  double hbar;
  kdq_mode mode;
} kdq_model_params;

typedef struct kdq_entry {
  int s_in, a_in, s_fin, a_fin; /* -1 when the subsystem is not resolved */
  double value;
  kdq_complex quasiprob;
} kdq_entry;

typedef struct kdq_moments {
  kdq_complex mean;
  kdq_complex second;
  kdq_complex variance;
} kdq_moments;

typedef struct kdq_nonpositivity {
  double n_q, n_re, n_im;
} kdq_nonpositivity;

typedef struct kdq_steady_result {
  kdq_state state;
  long iterations;
  double residual;
  int converged;
} kdq_steady_result;

typedef struct kdq_model kdq_model;
typedef struct kdq_experiment kdq_experiment;

KDQ_API const char* kdq_version(void);

/* Message of the last failed call on this thread; empty after success. */
KDQ_API const char* kdq_last_error(void);

KDQ_API void kdq_model_params_default(kdq_model_params* out);
KDQ_API kdq_status kdq_model_create(const kdq_model_params* params, kdq_model** out);
KDQ_API void kdq_model_destroy(kdq_model* model);
KDQ_API kdq_status kdq_lambda_max(const kdq_model_params* params, double* out);

KDQ_API kdq_status kdq_state_from_params(double rho11, double r, double phi_c, kdq_state* out);

KDQ_API kdq_status kdq_collide(const kdq_model* model, const kdq_state* in, kdq_state* out);
KDQ_API kdq_status kdq_steady_state(const kdq_model* model, const kdq_state* start, double tol,
                                    kdq_steady_result* out);

/* Writes up to `capacity` entries and stores the full count in *count. */
KDQ_API kdq_status kdq_distribution(const kdq_model* model, const kdq_state* state, kdq_quantity quantity,
                                    kdq_entry* entries, size_t capacity, size_t* count);
KDQ_API kdq_status kdq_moments_of(const kdq_model* model, const kdq_state* state, kdq_quantity quantity,
                                  kdq_moments* out);
KDQ_API kdq_status kdq_nonpositivity_of(const kdq_model* model, const kdq_state* state, kdq_quantity quantity,
                                        kdq_nonpositivity* out);

KDQ_API kdq_status kdq_experiment_parse(const char* text, kdq_experiment** out);
KDQ_API kdq_status kdq_experiment_preset(const char* name, kdq_experiment** out);
KDQ_API void kdq_experiment_destroy(kdq_experiment* exp);
KDQ_API kdq_status kdq_experiment_set_output(kdq_experiment* exp, const char* path);

/* Canonical config text; valid until the handle changes or is destroyed. */
KDQ_API const char* kdq_experiment_describe(const kdq_experiment* exp);
KDQ_API size_t kdq_experiment_rows(const kdq_experiment* exp);

/* Writes the CSV and its .meta.json sidecar. threads = 0 uses all cores. */
KDQ_API kdq_status kdq_experiment_run(const kdq_experiment* exp, unsigned threads, size_t* rows,
                                      size_t* flagged, char* csv_path, size_t csv_path_capacity);

/* Comma-separated preset names. */
KDQ_API const char* kdq_preset_names(void);

typedef void (*kdq_selftest_callback)(const char* name, int passed, const char* detail, void* user);

/* Returns KDQ_OK when every check passed, KDQ_ERR_NUMERIC otherwise. */
KDQ_API kdq_status kdq_selftest(kdq_selftest_callback callback, void* user, int* failed);

#ifdef __cplusplus
}
#endif

#endif

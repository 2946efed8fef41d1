/*
 * Copyright 2026 The bopt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * Stable C interface to libbopt.
 *
 * Every function returns a bopt_status. On failure, bopt_last_error() gives
 * a message for the calling thread. Strings returned through `char**` out
 * parameters are owned by the caller and must be released with
 * bopt_string_free. Structured inputs and outputs are JSON documents.
 */

#ifndef BOPT_BOPT_H_
#define BOPT_BOPT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(BOPT_BUILDING_LIBRARY)
#define BOPT_API __declspec(dllexport)
#else
#define BOPT_API __declspec(dllimport)
#endif
#else
#define BOPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bopt_status {
  BOPT_OK = 0,
  BOPT_INVALID_ARGUMENT = 1,
  BOPT_CONDITIONING = 2,
  BOPT_INVALID_OBJECTIVE = 3,
  BOPT_NOT_FOUND = 4,
  BOPT_WRONG_MODE = 5,
  BOPT_CONFLICT = 6,
  BOPT_IO = 7,
  BOPT_PARSE = 8,
  BOPT_INTERNAL = 9
} bopt_status;

typedef struct bopt_session bopt_session;
typedef struct bopt_service bopt_service;

/* Objective callback: write f(x) to *value and return 0, or nonzero to abort. */
typedef int (*bopt_objective_fn)(const double* x, size_t dim, double* value, void* user);
/* Receives one JSON record per evaluation. */
typedef void (*bopt_trace_fn)(const char* record_json, void* user);

BOPT_API const char* bopt_version(void);
BOPT_API const char* bopt_status_name(bopt_status status);
/* Message for the last failure on this thread; empty if none. */
BOPT_API const char* bopt_last_error(void);
/* Field path of the last failure ("bounds[1]"), empty if not applicable. */
BOPT_API const char* bopt_last_error_field(void);
BOPT_API void bopt_string_free(char* s);

/* ---- sessions ---------------------------------------------------------- */

BOPT_API bopt_status bopt_session_create(const char* config_json, bopt_session** out);
BOPT_API bopt_status bopt_session_from_json(const char* document, bopt_session** out);
BOPT_API bopt_status bopt_session_to_json(const bopt_session* s, char** out);
BOPT_API bopt_status bopt_session_load(const char* path, bopt_session** out);
BOPT_API bopt_status bopt_session_save(const bopt_session* s, const char* path);
BOPT_API void bopt_session_free(bopt_session* s);

BOPT_API size_t bopt_session_dim(const bopt_session* s);
BOPT_API size_t bopt_session_iteration(const bopt_session* s);

/* Scalar mode. `x` must hold dim() doubles. */
BOPT_API bopt_status bopt_session_propose(const bopt_session* s, double* x);
BOPT_API bopt_status bopt_session_observe(bopt_session* s, const double* x, double y);
/* Both modes; `x` receives the incumbent location. */
BOPT_API bopt_status bopt_session_best(const bopt_session* s, double* x, double* value);
/* Posterior mean and standard deviation at `x`. */
BOPT_API bopt_status bopt_session_predict(const bopt_session* s, const double* x, double* mean,
                                          double* stddev);

/* Preference mode. `first` and `second` must each hold dim() doubles. */
BOPT_API bopt_status bopt_session_select_pair(const bopt_session* s, double* first, double* second);
/* `token` may be NULL; a repeated non-empty token is ignored. */
BOPT_API bopt_status bopt_session_record_preference(bopt_session* s, const double* winner,
                                                    const double* loser, const char* token);

/* ---- one-shot operations ----------------------------------------------- */

/* Maximizes `objective` over a box with DIRECT. `argmax` holds dim doubles. */
BOPT_API bopt_status bopt_maximize(bopt_objective_fn objective, void* user, size_t dim,
                                   const double* lower, const double* upper,
                                   size_t max_evaluations, double* argmax, double* value);

/* Runs a scalar session for `iterations` evaluations of `objective`.
 * Result JSON: {"best": {"x", "value"}, "evaluations": n}. */
BOPT_API bopt_status bopt_optimize(const char* config_json, size_t iterations,
                                   bopt_objective_fn objective, void* objective_user,
                                   bopt_trace_fn trace, void* trace_user, char** result_json);

/* Hyperparameter fit. Data: {"bounds", "x": [[...]], "y": [...]};
 * options: {"kernel", "seeds", "rng_seed", "fit_noise_variance", "hyperprior"}. */
BOPT_API bopt_status bopt_fit(const char* data_json, const char* options_json, char** report_json);

/* Harness benchmarks; see README for the request and report schemas. */
BOPT_API bopt_status bopt_benchmark_scalar(const char* request_json, bopt_trace_fn trace,
                                           void* trace_user, char** report_json);
BOPT_API bopt_status bopt_benchmark_preference(const char* request_json, char** report_json);
/* JSON array of built-in objective names. */
BOPT_API bopt_status bopt_objective_names(char** out);

/* ---- service ----------------------------------------------------------- */

BOPT_API bopt_status bopt_service_create(const char* data_dir, bopt_service** out);
BOPT_API void bopt_service_free(bopt_service* svc);
/* Routes one request without a socket. `target` is path plus query. */
BOPT_API bopt_status bopt_service_handle(bopt_service* svc, const char* method, const char* target,
                                         const char* body, int* http_status, char** response_body);
/* Binds (port 0 picks one) and reports the bound port. */
BOPT_API bopt_status bopt_service_bind(bopt_service* svc, const char* host, int port, int* bound_port);
/* Blocks until bopt_service_stop is called from another thread. */
BOPT_API bopt_status bopt_service_run(bopt_service* svc);
BOPT_API void bopt_service_stop(bopt_service* svc);

#ifdef __cplusplus
}
#endif

#endif /* BOPT_BOPT_H_ */

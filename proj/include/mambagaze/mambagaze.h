/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The MambaGaze Authors */

#ifndef MAMBAGAZE_MAMBAGAZE_H
#define MAMBAGAZE_MAMBAGAZE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define MG_API __attribute__((visibility("default")))
#else
#define MG_API
#endif

/* Status codes. Every function returning mg_status reports failures here and
 * leaves a message for mg_last_error() on the calling thread. */
typedef enum mg_status {
  MG_OK = 0,
  MG_ERR_DIMENSION = 1,
  MG_ERR_NUMERIC_DOMAIN = 2,
  MG_ERR_CONTRACT = 3,
  MG_ERR_CONFIG = 4,
  MG_ERR_SCHEMA = 5,
  MG_ERR_EMPTY_RECORDING = 6,
  MG_ERR_CORRUPTION = 7,
  MG_ERR_DEGENERATE_FOLD = 8,
  MG_ERR_PROTOCOL = 9,
  MG_ERR_IO = 10,
  MG_ERR_USAGE = 11,
  MG_ERR_INTERNAL = 99
} mg_status;

typedef struct mg_model mg_model;

MG_API const char* mg_version(void);
MG_API const char* mg_status_name(mg_status status);
/* Message of the last failure on this thread; empty when none. */
MG_API const char* mg_last_error(void);

/* Strings returned through char** are owned by the caller. */
MG_API void mg_string_free(char* s);

/* Builds a freshly initialized model. `config_json` is a model config object
 * (NULL or "" for defaults). */
MG_API mg_status mg_model_create(const char* config_json, mg_model** out);
MG_API mg_status mg_model_load(const char* checkpoint_path, mg_model** out);
MG_API mg_status mg_model_save(const mg_model* model, const char* checkpoint_path);
MG_API void mg_model_destroy(mg_model* model);
MG_API mg_status mg_model_param_count(const mg_model* model, size_t* out);
MG_API mg_status mg_model_input_dim(const mg_model* model, size_t* out);

/* Scores one window z [steps x width], row-major. The attention buffers are
 * optional; when given they must hold `steps` values each. */
MG_API mg_status mg_model_predict(const mg_model* model, const float* z, size_t steps, size_t width,
                                  double* probability, double* alpha_forward,
                                  double* alpha_backward);

/* Resolves defaults, an optional config file and an optional JSON overlay
 * into the full run configuration. */
MG_API mg_status mg_resolve_config(const char* config_path, const char* overlay_json,
                                   char** resolved_json);

/* Pipeline operations. `config_json` is a resolved (or partial) run config;
 * NULL means defaults. The JSON summary or report goes to `result_json`. */
MG_API mg_status mg_preprocess(const char* raw_dir, const char* out_dir, const char* config_json,
                               char** result_json);
MG_API mg_status mg_synth(const char* out_dir, const char* config_json, char** result_json);
MG_API mg_status mg_train(const char* manifest, const char* out_dir, const char* config_json,
                          char** result_json);
/* `checkpoint` may be NULL to cross-validate per the config protocol. */
MG_API mg_status mg_evaluate(const char* manifest, const char* out_dir, const char* config_json,
                             const char* checkpoint, char** result_json);
/* `checkpoint`, `out_dir` and `power_file` may be NULL. */
MG_API mg_status mg_bench(const char* checkpoint, const char* out_dir, const char* config_json,
                          const char* power_file, double power_scale, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* MAMBAGAZE_MAMBAGAZE_H */

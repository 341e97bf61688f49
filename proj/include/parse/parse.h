/* Copyright 2026 The PARSE Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

/* C interface to the structural classification library. All handles are
 * opaque; every call returns a status code and, on failure, leaves a message
 * retrievable with parse_last_error(). Strings returned through char** are
 * owned by the caller and released with parse_string_free(). Configuration
 * and reports are JSON documents. */
#ifndef PARSE_PARSE_H_
#define PARSE_PARSE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PARSE_API __declspec(dllexport)
#else
#define PARSE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum parse_status {
  PARSE_OK = 0,
  PARSE_ERR_INVALID_ARGUMENT = 1,
  PARSE_ERR_FORMAT = 2,
  PARSE_ERR_IO = 3,
  PARSE_ERR_NUMERIC = 4,
  PARSE_ERR_RUNTIME = 5
} parse_status;

typedef struct parse_model parse_model;
typedef struct parse_dataset parse_dataset;

/* {"library", "checkpoint_format", "checkpoint_version", "catalog_canonicalization"} */
PARSE_API const char* parse_version(void);
/* Message of the last failed call on this thread, "" when none. */
PARSE_API const char* parse_last_error(void);
PARSE_API void parse_string_free(char* s);

/* Datasets --------------------------------------------------------------- */
PARSE_API parse_status parse_dataset_generate(const char* config_json, const char* out_dir);
PARSE_API parse_status parse_dataset_open(const char* dir, parse_dataset** out);
PARSE_API void parse_dataset_free(parse_dataset* data);
PARSE_API parse_status parse_dataset_info(const parse_dataset* data, char** out_json);

/* Models ----------------------------------------------------------------- */
PARSE_API parse_status parse_model_create(const char* model_config_json, uint64_t seed,
                                          parse_model** out);
PARSE_API parse_status parse_model_load(const char* path, parse_model** out);
PARSE_API parse_status parse_model_save(const parse_model* model, const char* path);
PARSE_API void parse_model_free(parse_model* model);
/* Config, catalog descriptor, parameter counts, input size. */
PARSE_API parse_status parse_model_info(const parse_model* model, char** out_json);
/* Planar CHW image in [0, 1]; logits_len must equal the class count. */
PARSE_API parse_status parse_model_logits(const parse_model* model, const float* image,
                                          size_t image_len, int float64, double* logits,
                                          size_t logits_len);

/* Training and evaluation ------------------------------------------------ */
/* Trains with `target` held out, writes the checkpoint and newline-delimited
 * epoch metrics (metrics_path may be NULL) and returns a summary. */
PARSE_API parse_status parse_train(const parse_dataset* data, const char* target,
                                   const char* train_config_json, const char* checkpoint_path,
                                   const char* metrics_path, char** summary_json);
/* split_json: {"target": domain, "split": "test"|"val"|"train"|"all", "seed": n,
 * "val_fraction": f}. Missing target evaluates every sample. */
PARSE_API parse_status parse_evaluate(const parse_model* model, const parse_dataset* data,
                                      const char* split_json, int float64, char** report_json);
/* Leave-one-domain-out; per-target checkpoints and metrics go to out_dir. */
PARSE_API parse_status parse_lodo(const parse_dataset* data, const char* train_config_json,
                                  const char* out_dir, char** summary_json);

/* Compaction, inspection, verification ----------------------------------- */
/* Verification uses up to sample_count dataset images, or seeded random
 * images when data is NULL. */
PARSE_API parse_status parse_compact(const parse_model* model, double tau,
                                     const parse_dataset* data, size_t sample_count,
                                     uint64_t seed, int float64, parse_model** out,
                                     char** report_json);
PARSE_API parse_status parse_inspect(const parse_model* model, const char* image_path,
                                     const char* out_dir, char** report_json);
/* options_json: {"models", "step", "tolerance", "batch", "style_mix", "relations"} */
PARSE_API parse_status parse_gradcheck(uint64_t seed, const char* options_json,
                                       char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* PARSE_PARSE_H_ */

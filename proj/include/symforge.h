/*
 * Licensed under the Apache License, Version 2.0 (the "License"); you
 * may not use this file except in compliance with the License.  You
 * may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
 * implied.  See the License for the specific language governing
 * permissions and limitations under the License.
 */

/*
 * symforge C API: unsupervised discovery of the minimal discrete generator
 * of a hidden one-parameter symmetry group, plus the synthetic datasets and
 * evaluation metrics that go with it.
 *
 * All functions return SF_OK (0) on success; on failure sf_last_error()
 * holds a message for the calling thread. Configurations are JSON strings
 * with "dataset", "train" and "eval" sections; unknown keys are rejected
 * and omitted keys take documented defaults.
 */

#ifndef SYMFORGE_H
#define SYMFORGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SYMFORGE_API __declspec(dllexport)
#else
#define SYMFORGE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_CONFIG = 2,  /* invalid configuration, argument or domain */
  SF_ERR_NUMERIC = 3, /* NaN/Inf or a failed numerical procedure */
  SF_ERR_IO = 4,      /* file or serialization failure */
} sf_status;

/* Opaque dataset handle. */
typedef struct sf_dataset sf_dataset;

SYMFORGE_API const char* sf_version(void);

/* Message for the most recent failure on this thread; never NULL. */
SYMFORGE_API const char* sf_last_error(void);

/* --- datasets ----------------------------------------------------------- */

/* Generates a synthetic dataset from the "dataset" section of the config. */
SYMFORGE_API sf_status sf_dataset_generate(const char* config_json,
                                           sf_dataset** out);

SYMFORGE_API sf_status sf_dataset_load(const char* path, sf_dataset** out);
SYMFORGE_API sf_status sf_dataset_save(const sf_dataset* ds, const char* path);
SYMFORGE_API sf_status sf_dataset_export_csv(const sf_dataset* ds,
                                             const char* path);

SYMFORGE_API int64_t sf_dataset_rows(const sf_dataset* ds);
SYMFORGE_API int32_t sf_dataset_dim(const sf_dataset* ds);

/* Generation metadata as a JSON string; free with sf_string_free. */
SYMFORGE_API sf_status sf_dataset_meta(const sf_dataset* ds, char** json_out);

SYMFORGE_API void sf_dataset_free(sf_dataset* ds);

/* --- training ------------------------------------------------------------ */

typedef void (*sf_train_progress)(int64_t step, int64_t total_steps,
                                  double total_loss, void* user);

/*
 * Trains on the dataset using the "train" section of the config and writes
 * run_dir/checkpoint.bin, training_log.csv, snapshots/ and
 * resolved_config.json. A non-finite loss aborts with SF_ERR_NUMERIC after
 * writing run_dir/diagnostic.json.
 */
SYMFORGE_API sf_status sf_train(const sf_dataset* ds, const char* config_json,
                                const char* run_dir, sf_train_progress progress,
                                void* user);

/* --- evaluation ----------------------------------------------------------- */

/*
 * Compares the checkpoint in run_dir against the dataset's ground truth.
 * options_json: {"png": bool, "eval_rows": int, "artifact_dir": "path"}
 * (all optional). When artifact_dir is set, generator CSVs and heatmaps are
 * written there. The report JSON is returned through report_json_out; free
 * it with sf_string_free.
 */
SYMFORGE_API sf_status sf_evaluate(const char* run_dir, const sf_dataset* ds,
                                   const char* options_json,
                                   char** report_json_out);

/*
 * Aggregates report.json files into a summary table (rows: symmetry kind,
 * columns: signal family). as_csv selects CSV instead of Markdown. Missing
 * or unreadable reports leave their cells empty.
 */
SYMFORGE_API sf_status sf_report_table(const char* const* report_paths,
                                       size_t count, int as_csv,
                                       char** table_out);

SYMFORGE_API void sf_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SYMFORGE_H */

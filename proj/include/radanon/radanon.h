/* Copyright 2026 The Radanon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * C interface to the radanon library.
 *
 * Every fallible call returns a radanon_status; on failure a description is
 * available from radanon_last_error() on the calling thread until the next
 * failing call. Objects are opaque handles created by *_create / *_load /
 * producer functions and released with the matching *_free, which accepts
 * NULL. Output handles are only written on success.
 */
#ifndef RADANON_RADANON_H_
#define RADANON_RADANON_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RADANON_API __declspec(dllexport)
#else
#define RADANON_API __attribute__((visibility("default")))
#endif

typedef enum radanon_status {
  RADANON_OK = 0,
  RADANON_INVALID_ARGUMENT = 1,
  RADANON_IO_ERROR = 2,
  RADANON_STATE_ERROR = 3,
  RADANON_INTERNAL_ERROR = 4
} radanon_status;

RADANON_API const char* radanon_last_error(void);
RADANON_API const char* radanon_status_string(radanon_status status);
RADANON_API const char* radanon_version(void);

/* ---- Images ------------------------------------------------------------ */

typedef struct radanon_image radanon_image;

/* Copies height * width row-major intensities; `pixels` may be NULL for a
 * zero image. */
RADANON_API radanon_status radanon_image_create(size_t height, size_t width,
                                                const double* pixels,
                                                radanon_image** out);
RADANON_API radanon_status radanon_image_load_png(const char* path,
                                                  radanon_image** out);
RADANON_API radanon_status radanon_image_save_png(const radanon_image* image,
                                                  const char* path);
RADANON_API radanon_status radanon_image_resize(const radanon_image* image,
                                                size_t side,
                                                radanon_image** out);
RADANON_API size_t radanon_image_height(const radanon_image* image);
RADANON_API size_t radanon_image_width(const radanon_image* image);
/* Borrowed pointer, valid until the image is freed. */
RADANON_API const double* radanon_image_pixels(const radanon_image* image);
RADANON_API void radanon_image_free(radanon_image* image);

/* |x - fx| per pixel. */
RADANON_API radanon_status radanon_difference_map(const radanon_image* x,
                                                  const radanon_image* fx,
                                                  radanon_image** out);

/* ---- DP-Pix ------------------------------------------------------------ */

typedef struct radanon_dp_pix_config {
  size_t b;
  double epsilon;
  double m;
  uint64_t seed;
} radanon_dp_pix_config;

RADANON_API radanon_dp_pix_config radanon_dp_pix_config_default(void);
RADANON_API radanon_status radanon_pixelize(const radanon_image* image,
                                            size_t b, radanon_image** out);
RADANON_API radanon_status radanon_dp_pixelize(const radanon_image* image,
                                               const radanon_dp_pix_config* config,
                                               radanon_image** out);

/* ---- Corpora ------------------------------------------------------------ */

typedef struct radanon_corpus radanon_corpus;

#define RADANON_NUM_CLASSES 14

typedef struct radanon_synth_config {
  size_t n_patients;
  double images_per_patient;
  size_t side;
  double watermark_strength;
  double noise_std;
  double blob_strength;
  double prevalence[RADANON_NUM_CLASSES];
  uint64_t seed;
} radanon_synth_config;

RADANON_API radanon_synth_config radanon_synth_config_default(void);
RADANON_API radanon_status radanon_corpus_synth(const radanon_synth_config* config,
                                                radanon_corpus** out);
/* PNGs under `dir` listed in the CSV index, resized to side x side. The
 * number of unreadable, skipped images is written to `skipped` if non-NULL. */
RADANON_API radanon_status radanon_corpus_ingest(const char* dir,
                                                 const char* index_csv,
                                                 size_t side, size_t* skipped,
                                                 radanon_corpus** out);
RADANON_API radanon_status radanon_corpus_save(const radanon_corpus* corpus,
                                               const char* path);
RADANON_API radanon_status radanon_corpus_load(const char* path,
                                               radanon_corpus** out);
/* Writes one PNG per record plus index.csv into `dir`. */
RADANON_API radanon_status radanon_corpus_export_png(const radanon_corpus* corpus,
                                                     const char* dir);
RADANON_API size_t radanon_corpus_size(const radanon_corpus* corpus);
RADANON_API size_t radanon_corpus_num_patients(const radanon_corpus* corpus);
/* Copy of record `index`'s image. */
RADANON_API radanon_status radanon_corpus_image(const radanon_corpus* corpus,
                                                size_t index,
                                                radanon_image** out);
RADANON_API const char* radanon_corpus_patient(const radanon_corpus* corpus,
                                               size_t index);
/* Writes RADANON_NUM_CLASSES label bits. */
RADANON_API radanon_status radanon_corpus_labels(const radanon_corpus* corpus,
                                                 size_t index, uint8_t* labels);
/* Same records with every image passed through DP-Pix; one generator seeded
 * from config->seed draws noise in record order. */
RADANON_API radanon_status radanon_corpus_dp_pixelize(
    const radanon_corpus* corpus, const radanon_dp_pix_config* config,
    radanon_corpus** out);
RADANON_API void radanon_corpus_free(radanon_corpus* corpus);

/* ---- Experiment: split and pairs ----------------------------------------- */

typedef struct radanon_experiment radanon_experiment;

typedef struct radanon_experiment_config {
  uint64_t split_seed;
  uint64_t pair_seed;
  size_t train_pairs;
  size_t val_pairs;
  size_t test_pairs;
} radanon_experiment_config;

RADANON_API radanon_experiment_config radanon_experiment_config_default(void);
RADANON_API radanon_status radanon_experiment_prepare(
    const radanon_corpus* corpus, const radanon_experiment_config* config,
    radanon_experiment** out);
/* Record counts of the train (0), validation (1) and test (2) splits. */
RADANON_API size_t radanon_experiment_split_size(const radanon_experiment* e,
                                                 int which);
RADANON_API void radanon_experiment_free(radanon_experiment* e);

/* ---- Models ------------------------------------------------------------- */

typedef struct radanon_models radanon_models;

typedef struct radanon_model_config {
  size_t side;
  size_t generator_width;
  size_t generator_levels;
  uint64_t seed;
} radanon_model_config;

typedef struct radanon_pretrain_config {
  size_t epochs;
  size_t batch;
  double lr;
  size_t patience; /* 0 disables early stopping */
  uint64_t seed;
} radanon_pretrain_config;

typedef struct radanon_train_config {
  size_t epochs;
  size_t iterations;
  size_t batch;
  double lr;
  double aux_lr;
  double ver_lr;
  double mu;
  double ver_weight;
  uint64_t seed;
  const char* log_path; /* per-epoch CSV; NULL or "" disables */
} radanon_train_config;

RADANON_API radanon_model_config radanon_model_config_default(void);
/* which: 0 generator, 1 classifier, 2 verifier. */
RADANON_API radanon_pretrain_config radanon_pretrain_config_default(int which);
RADANON_API radanon_train_config radanon_train_config_default(void);

RADANON_API radanon_status radanon_models_create(const radanon_model_config* config,
                                                 radanon_models** out);
RADANON_API radanon_status radanon_models_load(const char* path,
                                               radanon_models** out);
RADANON_API radanon_status radanon_models_save(const radanon_models* models,
                                               const char* path);
/* Deformation degree the generator was last trained for. */
RADANON_API double radanon_models_mu(const radanon_models* models);
RADANON_API size_t radanon_models_side(const radanon_models* models);

/* Classifier and verifier on clean data, then the generator on the
 * reconstruction task at `mu`. Any config may be NULL to skip that network. */
RADANON_API radanon_status radanon_models_pretrain(
    radanon_models* models, const radanon_corpus* corpus,
    const radanon_experiment* experiment, double mu,
    const radanon_pretrain_config* generator,
    const radanon_pretrain_config* classifier,
    const radanon_pretrain_config* verifier);

/* Adversarial training of the generator against copies of the stored
 * classifier and verifier; the stored copies stay untouched. */
RADANON_API radanon_status radanon_models_train(
    radanon_models* models, const radanon_corpus* corpus,
    const radanon_experiment* experiment, const radanon_train_config* config);

RADANON_API radanon_status radanon_models_anonymize(const radanon_models* models,
                                                    const radanon_image* image,
                                                    double mu,
                                                    radanon_image** out);
RADANON_API radanon_status radanon_corpus_anonymize(const radanon_models* models,
                                                    const radanon_corpus* corpus,
                                                    double mu,
                                                    radanon_corpus** out);
RADANON_API void radanon_models_free(radanon_models* models);

/* ---- Evaluation ----------------------------------------------------------- */

typedef struct radanon_attack_report radanon_attack_report;
typedef struct radanon_utility_report radanon_utility_report;

typedef enum radanon_pairing {
  RADANON_PAIRING_DEFORMED_REAL = 0,
  RADANON_PAIRING_DEFORMED_DEFORMED = 1
} radanon_pairing;

typedef struct radanon_attack_config {
  size_t runs;
  size_t epochs;
  size_t batch;
  double lr;
  size_t patience;
  radanon_pairing pairing;
  uint64_t seed;
} radanon_attack_config;

typedef struct radanon_bootstrap_config {
  size_t n_boot;
  double level;
  uint64_t seed;
} radanon_bootstrap_config;

RADANON_API radanon_attack_config radanon_attack_config_default(void);
RADANON_API radanon_bootstrap_config radanon_bootstrap_config_default(void);

/* Mann-Whitney ROC AUC. */
RADANON_API radanon_status radanon_roc_auc(const double* scores, const int* labels,
                                           size_t n, double* auc);

/* Linkage attack: `anonymized` holds the same records as `real` (pass `real`
 * itself for the no-anonymization baseline). */
RADANON_API radanon_status radanon_attack_run(const radanon_corpus* real,
                                              const radanon_corpus* anonymized,
                                              const radanon_experiment* experiment,
                                              const radanon_attack_config* config,
                                              radanon_attack_report** out);
RADANON_API radanon_status radanon_attack_report_from_values(
    const double* aucs, size_t runs, radanon_attack_report** out);
RADANON_API size_t radanon_attack_report_runs(const radanon_attack_report* r);
RADANON_API double radanon_attack_report_auc(const radanon_attack_report* r,
                                             size_t run);
RADANON_API double radanon_attack_report_mean(const radanon_attack_report* r);
RADANON_API double radanon_attack_report_std(const radanon_attack_report* r);
RADANON_API void radanon_attack_report_free(radanon_attack_report* r);

/* Frozen pre-trained classifier of `models` on the test split of `images`. */
RADANON_API radanon_status radanon_utility_run(const radanon_models* models,
                                               const radanon_corpus* images,
                                               const radanon_experiment* experiment,
                                               const radanon_bootstrap_config* config,
                                               radanon_utility_report** out);
/* per_class holds RADANON_NUM_CLASSES values, NaN for undefined classes. */
RADANON_API radanon_status radanon_utility_report_from_values(
    const double* per_class, double mean, double ci_low, double ci_high,
    radanon_utility_report** out);
RADANON_API double radanon_utility_report_class_auc(const radanon_utility_report* r,
                                                    size_t cls);
RADANON_API double radanon_utility_report_mean(const radanon_utility_report* r);
RADANON_API double radanon_utility_report_ci_low(const radanon_utility_report* r);
RADANON_API double radanon_utility_report_ci_high(const radanon_utility_report* r);
RADANON_API void radanon_utility_report_free(radanon_utility_report* r);

typedef struct radanon_report_row {
  const char* method;
  const radanon_attack_report* attack;   /* may be NULL */
  const radanon_utility_report* utility; /* required */
} radanon_report_row;

/* Renders the privacy-utility table (format 0 text, 1 CSV). Writes at most
 * `capacity` bytes including the terminator; the full length without the
 * terminator is stored in `length`. */
RADANON_API radanon_status radanon_render_report(const radanon_report_row* rows,
                                                 size_t n_rows, int format,
                                                 char* buffer, size_t capacity,
                                                 size_t* length);

/* ---- Full protocol -------------------------------------------------------- */

typedef struct radanon_pipeline radanon_pipeline;

typedef struct radanon_pipeline_config {
  radanon_experiment_config experiment;
  radanon_model_config models;
  radanon_pretrain_config generator_pretrain;
  radanon_pretrain_config classifier_pretrain;
  radanon_pretrain_config verifier_pretrain;
  radanon_train_config train; /* mu and log_path are set per run */
  const double* mus;
  size_t n_mus;
  radanon_attack_config attack;
  radanon_dp_pix_config dp_pix;
  radanon_bootstrap_config bootstrap;
  const char* out_dir; /* artifacts; NULL or "" disables */
  /* Progress messages; may be NULL. */
  void (*progress)(const char* message, void* user);
  void* progress_user;
} radanon_pipeline_config;

/* Desk-scale defaults; `mus` points at static storage. */
RADANON_API radanon_pipeline_config radanon_pipeline_config_default(void);
RADANON_API radanon_status radanon_pipeline_run(const radanon_corpus* corpus,
                                                const radanon_pipeline_config* config,
                                                radanon_pipeline** out);
/* Rows: clean data, one per mu, DP-Pix. */
RADANON_API size_t radanon_pipeline_rows(const radanon_pipeline* p);
RADANON_API const char* radanon_pipeline_method(const radanon_pipeline* p,
                                                size_t row);
/* Borrowed reports, valid until the pipeline is freed. */
RADANON_API const radanon_attack_report* radanon_pipeline_attack(
    const radanon_pipeline* p, size_t row);
RADANON_API const radanon_utility_report* radanon_pipeline_utility(
    const radanon_pipeline* p, size_t row);
RADANON_API void radanon_pipeline_free(radanon_pipeline* p);

#ifdef __cplusplus
}
#endif

#endif /* RADANON_RADANON_H_ */

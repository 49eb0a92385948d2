/*
 * Copyright 2026 AVRFN Contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the AVRFN super-resolution kit. All entry points return a
 * status code; avrfn_last_error() carries the matching message for the
 * calling thread. Models are opaque handles owned by the caller.
 */

#ifndef AVRFN_H
#define AVRFN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AVRFN_API __declspec(dllexport)
#else
#define AVRFN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum avrfn_status {
    AVRFN_OK = 0,
    AVRFN_ERR_INVALID_ARGUMENT = 1,
    AVRFN_ERR_SHAPE = 2,
    AVRFN_ERR_IO = 3,
    AVRFN_ERR_FORMAT = 4,
    AVRFN_ERR_SCALE_MISMATCH = 5,
    AVRFN_ERR_NUMERIC = 6,
    AVRFN_ERR_INTERNAL = 7
} avrfn_status;

AVRFN_API const char* avrfn_status_string(avrfn_status status);

/* message for the most recent failure on this thread; empty string if none */
AVRFN_API const char* avrfn_last_error(void);

AVRFN_API const char* avrfn_version(void);

typedef enum avrfn_variant {
    AVRFN_VARIANT_DDRR = 0,
    AVRFN_VARIANT_RRSOCA = 1,
    AVRFN_VARIANT_CRCAN = 2,
    AVRFN_VARIANT_AVRFN = 3
} avrfn_variant;

typedef struct avrfn_model_desc {
    avrfn_variant variant;
    int32_t groups;
    int32_t blocks_per_group;
    int32_t filters;
    int32_t scale; /* 2, 3 or 4 */
    int32_t dilation_rates[3];
    int32_t gate_reduction;
    int32_t newton_schulz_iters;
    uint64_t init_seed;
} avrfn_model_desc;

AVRFN_API void avrfn_model_desc_defaults(avrfn_model_desc* desc);

typedef struct avrfn_degrade_desc {
    int32_t scale;          /* 2, 3 or 4 */
    double noise_mean;      /* 8-bit intensity levels */
    double noise_variance;  /* squared 8-bit intensity levels */
    int32_t noise_enabled;  /* 0 or 1 */
    int32_t lr_patch;       /* training patch edge; HR patches are scale times larger */
    uint64_t seed;
} avrfn_degrade_desc;

AVRFN_API void avrfn_degrade_desc_defaults(avrfn_degrade_desc* desc);

typedef struct avrfn_train_desc {
    int32_t epochs;
    int32_t steps_per_epoch;
    int32_t batch_size;
    double learning_rate;
    double beta1;
    double beta2;
    double epsilon;
    double weight_decay;
    int32_t checkpoint_every; /* epochs between checkpoints; 0 = final only */
} avrfn_train_desc;

AVRFN_API void avrfn_train_desc_defaults(avrfn_train_desc* desc);

/* ---- model lifecycle ---- */

typedef struct avrfn_model avrfn_model;

AVRFN_API avrfn_status avrfn_model_create(const avrfn_model_desc* desc, avrfn_model** out);
AVRFN_API avrfn_status avrfn_model_load(const char* path, avrfn_model** out);
AVRFN_API avrfn_status avrfn_model_save(const avrfn_model* model, const char* path);
AVRFN_API void avrfn_model_free(avrfn_model* model);
AVRFN_API avrfn_status avrfn_model_describe(const avrfn_model* model, avrfn_model_desc* out);
AVRFN_API int64_t avrfn_model_param_count(const avrfn_model* model);

/*
 * lr: row-major height*width doubles in [0,1];
 * sr_out: caller-allocated (height*scale)*(width*scale) doubles.
 */
AVRFN_API avrfn_status avrfn_model_infer(const avrfn_model* model, const double* lr,
                                         int32_t width, int32_t height, double* sr_out);

/* ---- batch pipeline entry points ---- */

/* progress callback; called once per optimizer step */
typedef void (*avrfn_progress_fn)(int32_t epoch, int64_t step, double mse, void* user);

AVRFN_API avrfn_status avrfn_train_dir(avrfn_model* model, const char* data_dir,
                                       const avrfn_degrade_desc* degrade,
                                       const avrfn_train_desc* train,
                                       const char* checkpoint_path_or_null,
                                       const char* loss_csv_path_or_null,
                                       avrfn_progress_fn progress_or_null, void* user);

/* degrades every image in in_dir, writes LR files plus manifest.json */
AVRFN_API avrfn_status avrfn_degrade_dir(const char* in_dir, const char* out_dir,
                                         const avrfn_degrade_desc* degrade);

/*
 * Evaluates model predictions (or the bicubic baseline when model is NULL and
 * bicubic_baseline is 1) on every image in data_dir, writing the aggregate
 * metrics CSV and optionally a per-image CSV. border_crop trims that many
 * pixels from every edge before scoring.
 */
AVRFN_API avrfn_status avrfn_eval_dir(const avrfn_model* model, const char* data_dir,
                                      const avrfn_degrade_desc* degrade, const char* test_set,
                                      const char* metrics_csv_path,
                                      const char* per_image_csv_path_or_null, int32_t threads,
                                      int32_t bicubic_baseline, int32_t border_crop);

AVRFN_API avrfn_status avrfn_infer_file(const avrfn_model* model, const char* lr_image_path,
                                        const char* sr_image_path);

/* ---- analyzer ---- */

typedef struct avrfn_conv_desc {
    int32_t kernel;
    int32_t dilation;
    int32_t in_ch;
    int32_t out_ch;
    int32_t bias; /* 0 or 1 */
} avrfn_conv_desc;

AVRFN_API int64_t avrfn_conv_param_count(const avrfn_conv_desc* conv);
AVRFN_API int32_t avrfn_conv_rf_extent(const avrfn_conv_desc* conv);

/* parameter ratio a/b; fails unless both receptive-field extents match */
AVRFN_API avrfn_status avrfn_compression_ratio(const avrfn_conv_desc* a,
                                               const avrfn_conv_desc* b, double* ratio);

/*
 * Per-layer table with parameter counts and receptive fields, as text.
 * Writes at most buf_len bytes (always NUL-terminated when buf_len > 0) and
 * stores the full length (excluding the NUL) in *needed when non-NULL.
 */
AVRFN_API avrfn_status avrfn_analyze_text(const avrfn_model_desc* desc, char* buf, size_t buf_len,
                                          size_t* needed);
AVRFN_API avrfn_status avrfn_analyze_csv_file(const avrfn_model_desc* desc, const char* path);
AVRFN_API avrfn_status avrfn_model_total_params(const avrfn_model_desc* desc, int64_t* total);

#ifdef __cplusplus
}
#endif

#endif /* AVRFN_H */

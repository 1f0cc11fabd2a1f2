#ifndef LCNF_LCNF_H
#define LCNF_LCNF_H

/*
 * C interface to the multiplexed-FPM simulation and LCNF reconstruction
 * library. Objects are opaque handles created by *_create / *_load style
 * calls and released with the matching *_free. Every fallible call returns
 * an lcnf_status; on failure lcnf_last_error() describes what went wrong
 * (per thread, valid until the next failing call on that thread).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LCNF_BUILDING_LIBRARY)
#    define LCNF_API __declspec(dllexport)
#  else
#    define LCNF_API __declspec(dllimport)
#  endif
#else
#  define LCNF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lcnf_status {
  LCNF_OK = 0,
  LCNF_ERROR_INTERNAL = 1,
  LCNF_ERROR_CONFIG = 2,
  LCNF_ERROR_NUMERIC = 3,
  LCNF_ERROR_IO = 4,
  LCNF_ERROR_INVALID = 5
} lcnf_status;

typedef struct lcnf_config lcnf_config;
typedef struct lcnf_image lcnf_image;     /* real 2-D array, row-major doubles */
typedef struct lcnf_stack lcnf_stack;     /* equally shaped planes */
typedef struct lcnf_dataset lcnf_dataset; /* input/target pairs with split labels */
typedef struct lcnf_model lcnf_model;     /* network plus optimizer state */
typedef struct lcnf_manifest lcnf_manifest;

LCNF_API const char* lcnf_version(void);
LCNF_API const char* lcnf_last_error(void);

/* ---- configuration ---------------------------------------------------- */

/* path may be NULL for pure profile defaults; profile is "desk" or "paper"
 * and is overridden by a "profile" key inside the file. */
LCNF_API lcnf_status lcnf_config_load(const char* path, const char* profile, lcnf_config** out);
LCNF_API lcnf_status lcnf_config_parse(const char* json_text, const char* profile, lcnf_config** out);
/* Merges a JSON object of overrides (same strict schema) into cfg. */
LCNF_API lcnf_status lcnf_config_merge(lcnf_config* cfg, const char* json_text);
LCNF_API void lcnf_config_free(lcnf_config* cfg);
/* 16 hex digits plus terminator: buffer of at least 17 bytes. */
LCNF_API lcnf_status lcnf_config_hash(const lcnf_config* cfg, char* buffer, size_t size);
/* Writes the canonical JSON if it fits; *needed receives the size including
 * the terminator either way. */
LCNF_API lcnf_status lcnf_config_json(const lcnf_config* cfg, char* buffer, size_t size, size_t* needed);

/* ---- images and stacks ------------------------------------------------ */

LCNF_API lcnf_status lcnf_image_create(size_t rows, size_t cols, const double* data, lcnf_image** out);
LCNF_API void lcnf_image_free(lcnf_image* image);
LCNF_API size_t lcnf_image_rows(const lcnf_image* image);
LCNF_API size_t lcnf_image_cols(const lcnf_image* image);
LCNF_API const double* lcnf_image_data(const lcnf_image* image);
LCNF_API lcnf_status lcnf_image_read(const char* path, lcnf_image** out);
LCNF_API lcnf_status lcnf_image_write(const lcnf_image* image, const char* path);
/* 8-bit min-max scaled PGM. */
LCNF_API lcnf_status lcnf_image_write_preview(const lcnf_image* image, const char* path);

LCNF_API lcnf_status lcnf_stack_create(const lcnf_image* const* planes, size_t count, lcnf_stack** out);
LCNF_API void lcnf_stack_free(lcnf_stack* stack);
LCNF_API size_t lcnf_stack_planes(const lcnf_stack* stack);
/* Copy of plane i. */
LCNF_API lcnf_status lcnf_stack_plane(const lcnf_stack* stack, size_t index, lcnf_image** out);
LCNF_API lcnf_status lcnf_stack_read(const char* path, lcnf_stack** out);
LCNF_API lcnf_status lcnf_stack_write(const lcnf_stack* stack, const char* path);

/* ---- physics ---------------------------------------------------------- */

/* One phantom object from `seed`, imaged with the five multiplexed patterns.
 * Any output pointer may be NULL. phase: object phase in radians (HR grid);
 * measurements: 5 LR intensities (BF1, BF2, DF1, DF2, DF3); inputs: the
 * 6-channel network stack; target: normalized phase. */
LCNF_API lcnf_status lcnf_simulate_multiplexed(const lcnf_config* cfg, uint64_t seed, lcnf_image** phase,
                                               lcnf_stack** measurements, lcnf_stack** inputs,
                                               lcnf_image** target);

/* The same phantom under the sequential single-LED scan (center-out order). */
LCNF_API lcnf_status lcnf_simulate_sequential(const lcnf_config* cfg, uint64_t seed, lcnf_image** phase,
                                              lcnf_stack** measurements);

/* 5 multiplexed LR intensities -> 6-channel network stack. */
LCNF_API lcnf_status lcnf_prepare_inputs(const lcnf_config* cfg, const lcnf_stack* measurements,
                                         lcnf_stack** inputs);

/* Tikhonov DPC phase from the first two (brightfield) planes. */
LCNF_API lcnf_status lcnf_dpc(const lcnf_config* cfg, const lcnf_stack* measurements, lcnf_image** phase);

/* Sequential FPM reconstruction. field: 2 planes (real, imaginary) on the HR
 * grid. loss (optional) receives up to loss_capacity objective values;
 * *loss_count gets the full history length. */
LCNF_API lcnf_status lcnf_fpm(const lcnf_config* cfg, const lcnf_stack* measurements, lcnf_stack** field,
                              double* loss, size_t loss_capacity, size_t* loss_count);

/* ---- datasets ---------------------------------------------------------- */

/* split.train + split.val + split.test phantom pairs; seeds seed, seed+1, ... */
LCNF_API lcnf_status lcnf_dataset_build(const lcnf_config* cfg, uint64_t seed, size_t jobs, lcnf_dataset** out);
LCNF_API void lcnf_dataset_free(lcnf_dataset* ds);
LCNF_API size_t lcnf_dataset_size(const lcnf_dataset* ds);
/* Records the pairs in `manifest`, writes it to manifest_path as "pending",
 * then writes the pair files into `dir`. */
LCNF_API lcnf_status lcnf_dataset_save(const lcnf_dataset* ds, const char* dir, lcnf_manifest* manifest,
                                       const char* manifest_path);
/* Loads the pairs of `split` ("train", "val", "test" or NULL for all). */
LCNF_API lcnf_status lcnf_dataset_load(const char* manifest_path, const char* split, lcnf_dataset** out);
LCNF_API lcnf_status lcnf_dataset_pair(const lcnf_dataset* ds, size_t index, lcnf_stack** inputs,
                                       lcnf_image** target);

/* ---- model -------------------------------------------------------------- */

LCNF_API lcnf_status lcnf_model_create(const lcnf_config* cfg, uint64_t seed, lcnf_model** out);
LCNF_API void lcnf_model_free(lcnf_model* model);
LCNF_API lcnf_status lcnf_model_save(const lcnf_model* model, const char* path);
LCNF_API lcnf_status lcnf_model_load(const char* path, lcnf_model** out);

typedef void (*lcnf_step_callback)(void* user, size_t step, double loss, double lr);

/* `steps` optimizer steps over the dataset. losses (optional) receives one
 * value per step and must hold `steps` entries. */
LCNF_API lcnf_status lcnf_model_train(lcnf_model* model, const lcnf_dataset* train, size_t steps,
                                      size_t epoch_steps, lcnf_step_callback callback, void* user,
                                      double* losses);

/* Decodes an out_rows x out_cols grid. radians != 0 applies the model's
 * phase mapping; otherwise values stay in normalized units. */
LCNF_API lcnf_status lcnf_model_infer(const lcnf_model* model, const lcnf_stack* inputs, size_t out_rows,
                                      size_t out_cols, size_t jobs, int radians, lcnf_image** out);

/* Patch-wise inference with alpha blending (tile and overlap in LR pixels). */
LCNF_API lcnf_status lcnf_model_infer_tiled(const lcnf_model* model, const lcnf_stack* inputs, size_t scale,
                                            size_t tile, size_t overlap, size_t jobs, int radians,
                                            lcnf_image** out);

/* ---- evaluation ------------------------------------------------------- */

/* Blends tiles laid out row-major on a regular grid plan. */
LCNF_API lcnf_status lcnf_stitch(const lcnf_image* const* tiles, size_t count, size_t rows, size_t cols,
                                 size_t tile, size_t overlap, lcnf_image** out);

typedef struct lcnf_metrics {
  double mse;
  double psnr_db; /* +inf for identical images */
  double ssim;
  double fm;
} lcnf_metrics;

LCNF_API lcnf_status lcnf_metrics_compute(const lcnf_image* pred, const lcnf_image* ref,
                                          double fm_threshold_ratio, lcnf_metrics* out);

LCNF_API lcnf_status lcnf_bicubic(const lcnf_image* image, size_t out_rows, size_t out_cols, lcnf_image** out);

typedef struct lcnf_gradcheck_row {
  char layer[32];
  double max_rel_error;
  size_t configs;
  int passed;
} lcnf_gradcheck_row;

/* Fills up to `capacity` rows; *count receives the number of checks. */
LCNF_API lcnf_status lcnf_gradcheck(uint64_t seed, size_t configs, double tolerance, lcnf_gradcheck_row* rows,
                                    size_t capacity, size_t* count);

/* ---- manifests -------------------------------------------------------- */

LCNF_API lcnf_status lcnf_manifest_create(const lcnf_config* cfg, const char* command_line, lcnf_manifest** out);
LCNF_API void lcnf_manifest_free(lcnf_manifest* manifest);
LCNF_API lcnf_status lcnf_manifest_add_seed(lcnf_manifest* manifest, uint64_t seed);
LCNF_API lcnf_status lcnf_manifest_add_artifact(lcnf_manifest* manifest, const char* path, const char* kind);
/* status: "pending" or "complete". */
LCNF_API lcnf_status lcnf_manifest_write(lcnf_manifest* manifest, const char* path, const char* status);

#ifdef __cplusplus
}
#endif

#endif

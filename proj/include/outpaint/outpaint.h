/* C interface to the outpainting library.
 *
 * All objects are opaque handles released with the matching *_free call.
 * Functions return an op_status; on failure op_last_error() describes the
 * problem (thread-local, valid until the next call on the same thread).
 * Strings returned through char** are owned by the caller and released with
 * op_string_free. */
#ifndef OUTPAINT_OUTPAINT_H
#define OUTPAINT_OUTPAINT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define OP_API __declspec(dllexport)
#else
#define OP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum op_status {
  OP_OK = 0,
  OP_ERR_ARGUMENT = 1, /* bad argument, shape or geometry mismatch */
  OP_ERR_CONFIG = 2,   /* invalid configuration or schedule */
  OP_ERR_IO = 3,       /* file system failure */
  OP_ERR_FORMAT = 4,   /* corrupt or incompatible checkpoint / manifest / CSV */
  OP_ERR_DECODE = 5,   /* image could not be decoded */
  OP_ERR_NUMERIC = 6,  /* NaN or infinity during training */
  OP_ERR_INTERNAL = 7
} op_status;

typedef struct op_manifest op_manifest;
typedef struct op_image op_image;
typedef struct op_model op_model;

OP_API const char* op_last_error(void);
OP_API const char* op_version(void);
OP_API const char* op_status_name(op_status status);
OP_API void op_string_free(char* s);

/* Log verbosity: 0 quiet, 1 warnings, 2 info (default). */
OP_API void op_set_log_level(int level);

/* ---- configuration ---- */

/* JSON run config for "paper-global", "paper-local" or "desk". */
OP_API op_status op_profile_config(const char* profile, char** json_out);
/* Validates a run config and returns its normalized form (all fields set). */
OP_API op_status op_config_validate(const char* json, char** normalized_out);
/* Human-readable generator / discriminator layer tables plus receptive
 * fields for a run config. */
OP_API op_status op_describe_model(const char* config_json, char** text_out);

/* ---- dataset ---- */

OP_API op_status op_manifest_build(const char* root, size_t val_count, uint64_t seed,
                                   int target_height, int target_width, op_manifest** out);
OP_API op_status op_manifest_load(const char* path, op_manifest** out);
OP_API op_status op_manifest_save(const op_manifest* manifest, const char* path);
OP_API void op_manifest_free(op_manifest* manifest);
OP_API op_status op_manifest_counts(const op_manifest* manifest, size_t* train, size_t* val,
                                    size_t* skipped);
/* Borrowed pointer, valid while the manifest lives. */
OP_API op_status op_manifest_val_path(const op_manifest* manifest, size_t index,
                                      const char** path_out);

/* ---- images (8-bit RGB, row-major, interleaved) ---- */

OP_API op_status op_image_load(const char* path, op_image** out);
/* Loads and resizes (area averaging when shrinking). */
OP_API op_status op_image_load_resized(const char* path, int height, int width, op_image** out);
OP_API op_status op_image_create(int height, int width, const uint8_t* rgb, op_image** out);
OP_API op_status op_image_save_png(const op_image* image, const char* path);
OP_API void op_image_free(op_image* image);
OP_API int op_image_height(const op_image* image);
OP_API int op_image_width(const op_image* image);
/* Borrowed pointer to height * width * 3 bytes. */
OP_API const uint8_t* op_image_data(const op_image* image);
/* input | output | ground truth, any of which may be NULL except the first. */
OP_API op_status op_image_side_by_side(const op_image* const* images, size_t count,
                                       op_image** out);

/* ---- model ---- */

/* Fresh (untrained) generator for a run config, initialized from its seed. */
OP_API op_status op_model_create(const char* config_json, op_model** out);
OP_API op_status op_model_load_checkpoint(const char* path, op_model** out);
OP_API void op_model_free(op_model* model);
/* Model section of the run config (geometry, dilations, local_disc). */
OP_API op_status op_model_config(const op_model* model, char** json_out);

typedef enum op_blend_mode {
  OP_BLEND_PRESERVE_CENTER = 0, /* known pixels pasted before blending */
  OP_BLEND_LITERAL = 1          /* raw generator output as the destination */
} op_blend_mode;

/* Single-shot outpainting. `image` must match the model geometry; its strip
 * columns are ignored. If `ground_truth` is non-NULL, *rmse_out receives the
 * masked RMSE, otherwise it is set to -1. */
OP_API op_status op_outpaint(const op_model* model, const op_image* image,
                             const op_image* ground_truth, op_blend_mode mode,
                             op_image** out, double* rmse_out);
/* Recursive outpainting: width grows by 2 * strip * iterations. strip <= 0
 * uses the model's strip width. */
OP_API op_status op_outpaint_recursive(const op_model* model, const op_image* image,
                                       int iterations, int strip, op_blend_mode mode,
                                       op_image** out);
/* Per-image RMSE over the manifest's validation set as CSV
 * ("path,rmse" rows, then a "mean" row). */
OP_API op_status op_evaluate(const op_model* model, const op_manifest* manifest,
                             char** csv_out, double* mean_rmse_out);

/* ---- training ---- */

typedef struct op_train_record {
  int64_t iteration;
  const char* phase; /* "P1", "P2" or "P3" */
  double train_mse;
  double dev_mse;   /* NaN when not evaluated at this iteration */
  double disc_loss; /* NaN outside P2/P3 */
  double gen_loss;  /* NaN outside P3 */
} op_train_record;

typedef void (*op_train_callback)(const op_train_record* record, void* user);

typedef struct op_train_summary {
  int64_t iterations_run;
  int64_t final_iteration;
  double last_train_mse;
  double last_dev_mse; /* NaN if never evaluated */
} op_train_summary;

/* Trains per `config_json` on `manifest`, writing config.json, loss.csv,
 * checkpoints/ and final.ckpt under out_dir. `resume` may name a checkpoint
 * to continue from (NULL for a fresh run). `summary` may be NULL. */
OP_API op_status op_train_run(const char* config_json, const op_manifest* manifest,
                              const char* out_dir, const char* resume,
                              op_train_callback callback, void* user,
                              op_train_summary* summary);

/* ---- overfit sanity check ---- */

typedef void (*op_overfit_callback)(int64_t iteration, double rmse, void* user);

/* Trains a fresh model on one image (dims divisible by 4) and returns a JSON
 * report with baseline, initial, per-decile and final masked RMSE. The last
 * outpainted result is written to *output_out when it is non-NULL. */
OP_API op_status op_overfit_sanity(const op_image* image, int64_t iterations, uint64_t seed,
                                   double adversarial_fraction, op_overfit_callback callback,
                                   void* user, char** report_json_out, op_image** output_out);

#ifdef __cplusplus
}
#endif

#endif /* OUTPAINT_OUTPAINT_H */

#ifndef CMAS_CMAS_H
#define CMAS_CMAS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CMAS_API __declspec(dllexport)
#else
#define CMAS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cmas_status {
  CMAS_OK = 0,
  CMAS_ERR_INVALID_ARGUMENT = 1, /* null handle, unknown key, bad enum string */
  CMAS_ERR_SHAPE = 2,
  CMAS_ERR_DOMAIN = 3,
  CMAS_ERR_PROJECTION = 4, /* a joint fell behind a camera */
  CMAS_ERR_NUMERICAL = 5,
  CMAS_ERR_CONFIG = 6,
  CMAS_ERR_IO = 7,
  CMAS_ERR_INTERNAL = 8
} cmas_status;

typedef struct cmas_config cmas_config;
typedef struct cmas_model cmas_model;

CMAS_API const char* cmas_version(void);
CMAS_API const char* cmas_status_string(cmas_status status);
/* Message of the last failing call on this thread; "" if none. */
CMAS_API const char* cmas_last_error(void);

/* Sampler configuration. Keys: views, steps, w_ref, lambda_bone, lr, iters,
   beta1, beta2, epsilon, min_depth, seed, threads, distance, elevation,
   reference_index. Defaults match the command-line tool. */
CMAS_API cmas_status cmas_config_create(cmas_config** out);
CMAS_API void cmas_config_destroy(cmas_config* config);
CMAS_API cmas_status cmas_config_clone(const cmas_config* config, cmas_config** out);
CMAS_API cmas_status cmas_config_set_int(cmas_config* config, const char* key, int64_t value);
CMAS_API cmas_status cmas_config_set_double(cmas_config* config, const char* key, double value);
CMAS_API cmas_status cmas_config_get_double(const cmas_config* config, const char* key, double* out);
/* Applies a JSON object of the keys above; unknown keys are rejected. */
CMAS_API cmas_status cmas_config_load_json(cmas_config* config, const char* path);
/* Checks every field; CMAS_ERR_CONFIG with a message on the first problem. */
CMAS_API cmas_status cmas_config_validate(const cmas_config* config);

/* Writes `count` synthetic motions of `frames` frames and their projections
   through the config's rig (views, distance, elevation), seeded by config
   seed. */
CMAS_API cmas_status cmas_synth_dataset(const cmas_config* config, int count, int frames,
                                        const char* out_dir);

/* Denoiser models. kind is "gaussian" or "regression". Fitting pools the 2D
   projections of every view in the dataset and uses the config's steps and
   seed. Per-step fit diagnostics are kept on the handle. */
CMAS_API cmas_status cmas_model_fit(const char* dataset_dir, const char* kind,
                                    const cmas_config* config, cmas_model** out);
CMAS_API cmas_status cmas_model_load(const char* path, cmas_model** out);
/* Denoiser that returns projections of the motion in `motion3d_path`. */
CMAS_API cmas_status cmas_model_oracle(const char* motion3d_path, cmas_model** out);
CMAS_API void cmas_model_destroy(cmas_model* model);
CMAS_API cmas_status cmas_model_save(const cmas_model* model, const char* path);
CMAS_API cmas_status cmas_model_shape(const cmas_model* model, int* frames, int* joints);
/* "gaussian", "regression" or "oracle". */
CMAS_API const char* cmas_model_kind(const cmas_model* model);
/* Number of diagnostic rows recorded by cmas_model_fit (0 otherwise). */
CMAS_API int cmas_model_fit_rows(const cmas_model* model);
/* Row i: diffusion step, empirical denoising MSE of the model, and the
   reference MSE (closed-form Bayes MSE for gaussian models, the analytic
   Gaussian denoiser's empirical MSE for regression models). */
CMAS_API cmas_status cmas_model_fit_row(const cmas_model* model, int i, int* step, double* mse,
                                        double* reference_mse);

/* Lifts one normalized 2D sequence (frames x joints x 2, row-major) seen from
   the reference view. mask may be NULL (all observed). out_xyz receives
   frames x joints x 3 values. */
CMAS_API cmas_status cmas_lift(const cmas_model* model, const cmas_config* config, int frames,
                               int joints, const double* xy, const uint8_t* mask, double* out_xyz);

typedef struct cmas_lift_options {
  /* Skip preprocessing; the input must then hold exactly the model length. */
  int raw;
  /* Joint map JSON for pose-estimator input; NULL selects COCO-17. */
  const char* joint_map_path;
  double confidence_threshold;
  double continuity_threshold;
  double smoothing_sigma;
} cmas_lift_options;

CMAS_API cmas_lift_options cmas_lift_options_default(void);

/* Reads Pose2D JSONL or a pose-estimator JSON array, preprocesses it unless
   options->raw, lifts every model-length window and writes Pose3D JSONL.
   diag_path may be NULL. windows_out may be NULL. */
CMAS_API cmas_status cmas_lift_file(const cmas_model* model, const cmas_config* config,
                                    const char* input_path, const cmas_lift_options* options,
                                    const char* out_path, const char* diag_path,
                                    int* windows_out);

/* alignment: "none", "root" or "procrustes". Result in millimeters. */
CMAS_API cmas_status cmas_mpjpe(int frames, int joints, const double* pred, const double* gt,
                                const char* alignment, double* out_mm);
CMAS_API cmas_status cmas_eval_files(const char* pred_path, const char* gt_path,
                                     const char* alignment, double* out_mm);

typedef struct cmas_ablate_options {
  /* Comma-separated lists; NULL selects the default grid, "" is an error. */
  const char* views_grid;
  const char* weights_grid;
  int components;
  /* 2D noise added to the reference-view inputs, normalized units. */
  double input_noise;
  /* Use at most this many sequences; 0 uses all. */
  int max_sequences;
  /* Also run the constant-depth baseline. */
  int baseline;
} cmas_ablate_options;

CMAS_API cmas_ablate_options cmas_ablate_options_default(void);

/* Runs the ablation grid over a dataset directory. Either output path may be
   NULL. rows_out may be NULL. */
CMAS_API cmas_status cmas_ablate(const cmas_model* model, const cmas_config* base,
                                 const char* dataset_dir, const cmas_ablate_options* options,
                                 const char* out_csv, const char* out_json, int* rows_out);

#ifdef __cplusplus
}
#endif

#endif

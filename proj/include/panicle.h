/*
 * C interface to the panicle phenotyping pipeline. All functions return a
 * pn_status; on failure pn_last_error() carries a thread-local message.
 * Handle types are opaque; every *_free accepts NULL.
 */
#ifndef PANICLE_H
#define PANICLE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PN_API __declspec(dllexport)
#else
#define PN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes for the CLI. */
typedef enum pn_status {
    PN_OK = 0,
    PN_ERROR_USAGE = 1,   /* invalid arguments or configuration */
    PN_ERROR_DATA = 2,    /* unreadable or malformed input data */
    PN_ERROR_PIPELINE = 3 /* a processing stage failed on valid input */
} pn_status;

PN_API const char* pn_version(void);
PN_API const char* pn_last_error(void);

typedef struct pn_cloud pn_cloud;
typedef struct pn_config pn_config;
typedef struct pn_calibration pn_calibration;

/* ---- point clouds ---- */
PN_API pn_status pn_cloud_create(const double* xyz, size_t count, pn_cloud** out);
PN_API pn_status pn_cloud_read_ply(const char* path, pn_cloud** out);
PN_API pn_status pn_cloud_write_ply(const pn_cloud* cloud, const char* path, int binary);
PN_API size_t pn_cloud_size(const pn_cloud* cloud);
/* Copies 3*pn_cloud_size(cloud) doubles into xyz. */
PN_API pn_status pn_cloud_points(const pn_cloud* cloud, double* xyz);
PN_API pn_status pn_cloud_downsample(const pn_cloud* cloud, double leaf, pn_cloud** out);
PN_API void pn_cloud_free(pn_cloud* cloud);

/* ---- configuration (key = value, same keys as the config file) ---- */
PN_API pn_status pn_config_create(pn_config** out);
PN_API pn_status pn_config_load(const char* path, pn_config** out);
PN_API pn_status pn_config_set(pn_config* config, const char* key, const char* value);
PN_API void pn_config_free(pn_config* config);

/* ---- size calibration ---- */
PN_API pn_status pn_calibration_from_label(const pn_cloud* label, double label_length_cm,
                                           pn_calibration** out);
PN_API pn_status pn_calibration_read(const char* path, pn_calibration** out);
PN_API pn_status pn_calibration_write(const pn_calibration* calib, const char* path);
PN_API double pn_calibration_x1(const pn_calibration* calib);
PN_API double pn_calibration_scale_cm_per_unit(const pn_calibration* calib);
PN_API void pn_calibration_free(pn_calibration* calib);

/* ---- in-memory measurements ---- */
PN_API pn_status pn_measure_length(const pn_config* config, const pn_cloud* panicle,
                                   const pn_calibration* calib, double* l1_scene,
                                   double* length_cm);
PN_API pn_status pn_measure_volume(const pn_config* config, const pn_cloud* panicle,
                                   const pn_calibration* calib, size_t* num_voxels,
                                   double* volume_cm3);
/* out_metrics: precision, recall, f1, iou, bo */
PN_API pn_status pn_seg_metrics_files(const char* pred_mask, const char* gt_mask,
                                      double out_metrics[5]);

/* ---- pipeline stages (file in, file out; the CLI subcommands) ---- */
PN_API pn_status pn_filter_views(const pn_config* config, const char* poses_json,
                                 const char* out_json);
PN_API pn_status pn_refine_masks(const pn_config* config, const char* fines_dir,
                                 const char* rough_dir, const char* out_dir);
PN_API pn_status pn_eval_seg(const char* pred_dir, const char* gt_dir, const char* out_csv);
PN_API pn_status pn_export_cloud(const pn_config* config, const char* grid_json,
                                 const char* out_ply);
PN_API pn_status pn_cluster(const pn_config* config, const char* in_ply,
                            const char* out_panicle_ply, const char* out_label_ply,
                            const char* report_json);
PN_API pn_status pn_calibrate(const pn_config* config, const char* label_ply,
                              const char* out_json);
PN_API pn_status pn_length(const pn_config* config, const char* panicle_ply,
                           const char* calib_json, const char* out_csv);
PN_API pn_status pn_volume(const pn_config* config, const char* panicle_ply,
                           const char* calib_json, const char* out_csv);
PN_API pn_status pn_eval_regression(const char* pairs_csv, const char* out_dir);
PN_API pn_status pn_synth(const char* kind, uint64_t seed, const char* out_dir, int with_grid);
PN_API pn_status pn_run_sample(const pn_config* config, const char* sample_dir,
                               const char* out_dir);
PN_API pn_status pn_run_batch(const pn_config* config, const char* root_dir,
                              const char* out_dir, size_t* failures);

#ifdef __cplusplus
}
#endif

#endif

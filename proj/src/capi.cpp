#include "panicle.h"

#include <memory>
#include <string>

#include "panicle/cloud_ops.hpp"
#include "panicle/eval.hpp"
#include "panicle/io.hpp"
#include "panicle/pipeline.hpp"
#include "panicle/segmentation.hpp"
#include "panicle/traits.hpp"
#include "panicle/types.hpp"

using namespace panicle;

struct pn_cloud {
    PointCloud cloud;
};
struct pn_config {
    PipelineConfig config;
};
struct pn_calibration {
    Calibration calib;
};

namespace {

thread_local std::string g_last_error;

pn_status toStatus(const std::exception& e) {
    g_last_error = e.what();
    if (dynamic_cast<const UsageError*>(&e)) return PN_ERROR_USAGE;
    if (dynamic_cast<const DataError*>(&e)) return PN_ERROR_DATA;
    return PN_ERROR_PIPELINE;
}

// Wraps a body returning pn_status; exceptions become status codes.
template <typename F>
pn_status guarded(F&& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        return toStatus(e);
    } catch (...) {
        g_last_error = "unknown error";
        return PN_ERROR_PIPELINE;
    }
}

pn_status requireArgs(bool ok) {
    if (!ok) g_last_error = "null argument";
    return ok ? PN_OK : PN_ERROR_USAGE;
}

}  // namespace

extern "C" {

const char* pn_version(void) { return "0.1.0"; }

const char* pn_last_error(void) { return g_last_error.c_str(); }

/* ---- clouds ---- */

pn_status pn_cloud_create(const double* xyz, size_t count, pn_cloud** out) {
    if (requireArgs(out && (xyz || count == 0))) return PN_ERROR_USAGE;
    return guarded([&] {
        auto handle = std::make_unique<pn_cloud>();
        handle->cloud.points.reserve(count);
        for (size_t i = 0; i < count; ++i)
            handle->cloud.points.push_back({xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]});
        handle->cloud.validate();
        *out = handle.release();
        return PN_OK;
    });
}

pn_status pn_cloud_read_ply(const char* path, pn_cloud** out) {
    if (requireArgs(path && out)) return PN_ERROR_USAGE;
    return guarded([&] {
        auto handle = std::make_unique<pn_cloud>();
        handle->cloud = readPly(path);
        *out = handle.release();
        return PN_OK;
    });
}

pn_status pn_cloud_write_ply(const pn_cloud* cloud, const char* path, int binary) {
    if (requireArgs(cloud && path)) return PN_ERROR_USAGE;
    return guarded([&] {
        writePly(cloud->cloud, path,
                 binary ? PlyFormat::BinaryLittleEndian : PlyFormat::Ascii);
        return PN_OK;
    });
}

size_t pn_cloud_size(const pn_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

pn_status pn_cloud_points(const pn_cloud* cloud, double* xyz) {
    if (requireArgs(cloud && xyz)) return PN_ERROR_USAGE;
    for (size_t i = 0; i < cloud->cloud.size(); ++i) {
        const Vec3& p = cloud->cloud.points[i];
        xyz[3 * i] = p.x;
        xyz[3 * i + 1] = p.y;
        xyz[3 * i + 2] = p.z;
    }
    return PN_OK;
}

pn_status pn_cloud_downsample(const pn_cloud* cloud, double leaf, pn_cloud** out) {
    if (requireArgs(cloud && out)) return PN_ERROR_USAGE;
    return guarded([&] {
        auto handle = std::make_unique<pn_cloud>();
        handle->cloud = voxelDownsample(cloud->cloud, leaf);
        *out = handle.release();
        return PN_OK;
    });
}

void pn_cloud_free(pn_cloud* cloud) { delete cloud; }

/* ---- configuration ---- */

pn_status pn_config_create(pn_config** out) {
    if (requireArgs(out)) return PN_ERROR_USAGE;
    return guarded([&] {
        *out = new pn_config{PipelineConfig::fromEnvironment()};
        return PN_OK;
    });
}

pn_status pn_config_load(const char* path, pn_config** out) {
    if (requireArgs(path && out)) return PN_ERROR_USAGE;
    return guarded([&] {
        *out = new pn_config{PipelineConfig::load(path)};
        return PN_OK;
    });
}

pn_status pn_config_set(pn_config* config, const char* key, const char* value) {
    if (requireArgs(config && key && value)) return PN_ERROR_USAGE;
    return guarded([&] {
        config->config.set(key, value);
        return PN_OK;
    });
}

void pn_config_free(pn_config* config) { delete config; }

/* ---- calibration ---- */

pn_status pn_calibration_from_label(const pn_cloud* label, double label_length_cm,
                                    pn_calibration** out) {
    if (requireArgs(label && out)) return PN_ERROR_USAGE;
    return guarded([&] {
        *out = new pn_calibration{calibrate(label->cloud, label_length_cm)};
        return PN_OK;
    });
}

pn_status pn_calibration_read(const char* path, pn_calibration** out) {
    if (requireArgs(path && out)) return PN_ERROR_USAGE;
    return guarded([&] {
        *out = new pn_calibration{readCalibration(path)};
        return PN_OK;
    });
}

pn_status pn_calibration_write(const pn_calibration* calib, const char* path) {
    if (requireArgs(calib && path)) return PN_ERROR_USAGE;
    return guarded([&] {
        writeCalibration(calib->calib, path);
        return PN_OK;
    });
}

double pn_calibration_x1(const pn_calibration* calib) { return calib ? calib->calib.x1 : 0.0; }

double pn_calibration_scale_cm_per_unit(const pn_calibration* calib) {
    return calib ? calib->calib.scale_cm_per_unit : 0.0;
}

void pn_calibration_free(pn_calibration* calib) { delete calib; }

/* ---- measurements ---- */

pn_status pn_measure_length(const pn_config* config, const pn_cloud* panicle,
                            const pn_calibration* calib, double* l1_scene, double* length_cm) {
    if (requireArgs(config && panicle && calib)) return PN_ERROR_USAGE;
    return guarded([&] {
        // The stage path shared with the CLI writes through a temp row; the
        // in-memory variant recomputes directly.
        const PipelineConfig& cfg = config->config;
        Vec3 mn = panicle->cloud.points.at(0), mx = mn;
        for (const Vec3& p : panicle->cloud.points)
            for (int a = 0; a < 3; ++a) {
                mn[a] = std::min(mn[a], p[a]);
                mx[a] = std::max(mx[a], p[a]);
            }
        PointCloud compact = voxelDownsample(panicle->cloud, cfg.downsample_frac * (mx - mn).norm());
        if (compact.size() < cfg.lbc_k + 1) compact = panicle->cloud;
        LbcParams params;
        params.k_neighbors = cfg.lbc_k;
        params.w_l_init = cfg.lbc_w_l;
        params.w_h_init = cfg.lbc_w_h;
        params.s_l = cfg.lbc_s_l;
        params.max_iters = cfg.lbc_max_iters;
        params.converge_ratio = cfg.lbc_converge;
        const LbcResult contracted = lbcContract(compact, params);
        const SkeletonGraph skeleton =
            buildSkeleton(contracted.contracted, cfg.node_spacing_frac, 8,
                          &contracted.surface_edges, &compact.points);
        const MainPath path = mainPath(skeleton, cfg.theta_max, cfg.tangent_scales);
        const double l1 = fitCurveLength(path, skeleton, cfg.curve_smooth);
        if (l1_scene) *l1_scene = l1;
        if (length_cm) *length_cm = panicleLength(l1, calib->calib);
        return PN_OK;
    });
}

pn_status pn_measure_volume(const pn_config* config, const pn_cloud* panicle,
                            const pn_calibration* calib, size_t* num_voxels,
                            double* volume_cm3) {
    if (requireArgs(config && panicle && calib)) return PN_ERROR_USAGE;
    return guarded([&] {
        const VolumeResult v =
            panicleVolume(panicle->cloud, calib->calib, config->config.voxel);
        if (num_voxels) *num_voxels = v.num_voxels;
        if (volume_cm3) *volume_cm3 = v.volume_cm3;
        return PN_OK;
    });
}

pn_status pn_seg_metrics_files(const char* pred_mask, const char* gt_mask,
                               double out_metrics[5]) {
    if (requireArgs(pred_mask && gt_mask && out_metrics)) return PN_ERROR_USAGE;
    return guarded([&] {
        const BinaryMask pred = readMask(pred_mask);
        const BinaryMask gt = readMask(gt_mask);
        const SegMetrics m = segMetrics(pred, gt);
        out_metrics[0] = m.precision;
        out_metrics[1] = m.recall;
        out_metrics[2] = m.f1;
        out_metrics[3] = m.iou;
        out_metrics[4] = boundaryOverlap(pred, gt);
        return PN_OK;
    });
}

/* ---- pipeline stages ---- */

pn_status pn_filter_views(const pn_config* config, const char* poses_json,
                          const char* out_json) {
    if (requireArgs(config && poses_json && out_json)) return PN_ERROR_USAGE;
    return guarded([&] {
        filterViewsFile(config->config, poses_json, out_json);
        return PN_OK;
    });
}

pn_status pn_refine_masks(const pn_config* config, const char* fines_dir,
                          const char* rough_dir, const char* out_dir) {
    if (requireArgs(config && fines_dir && rough_dir && out_dir)) return PN_ERROR_USAGE;
    return guarded([&] {
        refineMasksDir(config->config, fines_dir, rough_dir, out_dir);
        return PN_OK;
    });
}

pn_status pn_eval_seg(const char* pred_dir, const char* gt_dir, const char* out_csv) {
    if (requireArgs(pred_dir && gt_dir && out_csv)) return PN_ERROR_USAGE;
    return guarded([&] {
        evalSegDir(pred_dir, gt_dir, out_csv);
        return PN_OK;
    });
}

pn_status pn_export_cloud(const pn_config* config, const char* grid_json, const char* out_ply) {
    if (requireArgs(config && grid_json && out_ply)) return PN_ERROR_USAGE;
    return guarded([&] {
        exportCloudFile(config->config, grid_json, out_ply);
        return PN_OK;
    });
}

pn_status pn_cluster(const pn_config* config, const char* in_ply, const char* out_panicle_ply,
                     const char* out_label_ply, const char* report_json) {
    if (requireArgs(config && in_ply && out_panicle_ply && out_label_ply))
        return PN_ERROR_USAGE;
    return guarded([&] {
        clusterFile(config->config, in_ply, out_panicle_ply, out_label_ply,
                    report_json ? report_json : "");
        return PN_OK;
    });
}

pn_status pn_calibrate(const pn_config* config, const char* label_ply, const char* out_json) {
    if (requireArgs(config && label_ply && out_json)) return PN_ERROR_USAGE;
    return guarded([&] {
        calibrateFile(config->config, label_ply, out_json);
        return PN_OK;
    });
}

pn_status pn_length(const pn_config* config, const char* panicle_ply, const char* calib_json,
                    const char* out_csv) {
    if (requireArgs(config && panicle_ply && calib_json && out_csv)) return PN_ERROR_USAGE;
    return guarded([&] {
        lengthFile(config->config, panicle_ply, calib_json, out_csv);
        return PN_OK;
    });
}

pn_status pn_volume(const pn_config* config, const char* panicle_ply, const char* calib_json,
                    const char* out_csv) {
    if (requireArgs(config && panicle_ply && calib_json && out_csv)) return PN_ERROR_USAGE;
    return guarded([&] {
        volumeFile(config->config, panicle_ply, calib_json, out_csv);
        return PN_OK;
    });
}

pn_status pn_eval_regression(const char* pairs_csv, const char* out_dir) {
    if (requireArgs(pairs_csv && out_dir)) return PN_ERROR_USAGE;
    return guarded([&] {
        evalRegressionFile(pairs_csv, out_dir);
        return PN_OK;
    });
}

pn_status pn_synth(const char* kind, uint64_t seed, const char* out_dir, int with_grid) {
    if (requireArgs(kind && out_dir)) return PN_ERROR_USAGE;
    return guarded([&] {
        synthFile(kind, seed, out_dir, with_grid != 0);
        return PN_OK;
    });
}

pn_status pn_run_sample(const pn_config* config, const char* sample_dir, const char* out_dir) {
    if (requireArgs(config && sample_dir && out_dir)) return PN_ERROR_USAGE;
    return guarded([&] {
        const SampleResult result = runSample(config->config, sample_dir, out_dir);
        if (result.error) {
            g_last_error = result.failed_stage + ": " + *result.error;
            return PN_ERROR_PIPELINE;
        }
        return PN_OK;
    });
}

pn_status pn_run_batch(const pn_config* config, const char* root_dir, const char* out_dir,
                       size_t* failures) {
    if (requireArgs(config && root_dir && out_dir)) return PN_ERROR_USAGE;
    return guarded([&] {
        const BatchResult result = runBatch(config->config, root_dir, out_dir);
        if (failures) *failures = result.failure_count;
        return PN_OK;
    });
}

}  // extern "C"

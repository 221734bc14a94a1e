// Batch CLI over the shared-library C API. Exit codes: 0 success, 1 usage,
// 2 data error, 3 pipeline-stage failure.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "panicle.h"

namespace {

struct ConfigGuard {
    pn_config* handle = nullptr;
    ~ConfigGuard() { pn_config_free(handle); }
};

int finish(pn_status status) {
    if (status != PN_OK) std::fprintf(stderr, "error: %s\n", pn_last_error());
    return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"panicle phenotyping pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // --config/--set/--seed/--workers may follow the subcommand

    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed_override, workers_override;
    app.add_option("--config", config_path, "pipeline config file (key = value)");
    app.add_option("--set", overrides, "config override KEY=VALUE (repeatable)");
    app.add_option("--seed", seed_override, "override the pipeline seed");
    app.add_option("--workers", workers_override, "override the batch worker count");

    // filter-views
    auto* filter = app.add_subcommand("filter-views", "keep views aimed at the scene center");
    std::string poses, kept_out;
    double max_angle = -1.0;
    filter->add_option("--poses", poses, "pose JSON file")->required();
    filter->add_option("--max-angle", max_angle, "max deviation in degrees (default 20)");
    filter->add_option("--out", kept_out, "output JSON (kept ids + center)")->required();

    // refine-masks
    auto* refine = app.add_subcommand("refine-masks", "ensemble mask refinement");
    std::string fines_dir, rough_dir, refine_out;
    refine->add_option("--fines", fines_dir, "fine masks dir (+ stability.json)")->required();
    refine->add_option("--rough", rough_dir, "rough instance masks dir")->required();
    refine->add_option("--out", refine_out, "output dir")->required();

    // eval-seg
    auto* evalseg = app.add_subcommand("eval-seg", "segmentation metrics over mask dirs");
    std::string pred_dir, gt_dir, seg_csv;
    evalseg->add_option("--pred", pred_dir, "predicted masks dir")->required();
    evalseg->add_option("--gt", gt_dir, "ground-truth masks dir")->required();
    evalseg->add_option("--out", seg_csv, "metrics CSV")->required();

    // export-cloud
    auto* exportc = app.add_subcommand("export-cloud", "density grid -> point cloud");
    std::string grid_json, export_ply, iso_value = "auto";
    std::string export_density, export_seed;
    exportc->add_option("--grid", grid_json, "grid JSON header")->required();
    exportc->add_option("--iso", iso_value, "iso level or 'auto' (Otsu)");
    exportc->add_option("--density", export_density, "surface points per unit area");
    exportc->add_option("--seed", export_seed, "sampling seed");
    exportc->add_option("--out", export_ply, "output PLY")->required();

    // cluster
    auto* cluster = app.add_subcommand("cluster", "split scene into panicle and label clouds");
    std::string cluster_in, panicle_ply, label_ply, report_json, eps_value, min_pts_value;
    cluster->add_option("--in", cluster_in, "input PLY")->required();
    cluster->add_option("--eps", eps_value, "DBSCAN eps or 'auto'");
    cluster->add_option("--min-pts", min_pts_value, "DBSCAN min points");
    cluster->add_option("--out-panicle", panicle_ply, "panicle PLY")->required();
    cluster->add_option("--out-label", label_ply, "label PLY")->required();
    cluster->add_option("--report", report_json, "cluster report JSON");

    // calibrate
    auto* calib_cmd = app.add_subcommand("calibrate", "size calibration from the label cloud");
    std::string calib_label, calib_out, length_cm_value;
    calib_cmd->add_option("--label", calib_label, "label PLY")->required();
    calib_cmd->add_option("--length-cm", length_cm_value, "physical label length (default 7.5)");
    calib_cmd->add_option("--out", calib_out, "calibration JSON")->required();

    // length
    auto* length_cmd = app.add_subcommand("length", "panicle length from the skeleton");
    std::string len_panicle, len_calib, len_csv;
    length_cmd->add_option("--panicle", len_panicle, "panicle PLY")->required();
    length_cmd->add_option("--calib", len_calib, "calibration JSON")->required();
    length_cmd->add_option("--out", len_csv, "traits CSV")->required();

    // volume
    auto* volume_cmd = app.add_subcommand("volume", "panicle volume by voxel occupancy");
    std::string vol_panicle, vol_calib, vol_csv, voxel_value;
    volume_cmd->add_option("--panicle", vol_panicle, "panicle PLY")->required();
    volume_cmd->add_option("--calib", vol_calib, "calibration JSON")->required();
    volume_cmd->add_option("--voxel", voxel_value, "voxel edge in normalized units");
    volume_cmd->add_option("--out", vol_csv, "traits CSV")->required();

    // eval-reg
    auto* evalreg = app.add_subcommand("eval-reg", "regression report from paired values");
    std::string pairs_csv, evalreg_out;
    evalreg->add_option("--pairs", pairs_csv, "CSV: sample_id,trait,predicted,measured")
        ->required();
    evalreg->add_option("--out", evalreg_out, "report directory")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scene");
    std::string synth_kind = "panicle", synth_out;
    std::uint64_t synth_seed = 7;
    bool synth_grid = false;
    synth_cmd->add_option("--kind", synth_kind, "panicle | sphere | box");
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_flag("--grid", synth_grid, "also emit a density grid");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    // run / run-batch
    auto* run_cmd = app.add_subcommand("run", "run all available stages on one sample dir");
    std::string run_sample_dir, run_out;
    run_cmd->add_option("--sample", run_sample_dir, "sample directory")->required();
    run_cmd->add_option("--out", run_out, "output directory")->required();

    auto* batch_cmd = app.add_subcommand("run-batch", "run every sample under a root dir");
    std::string batch_root, batch_out;
    batch_cmd->add_option("--root", batch_root, "root directory of sample dirs")->required();
    batch_cmd->add_option("--out", batch_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(PN_ERROR_USAGE);
    }

    ConfigGuard config;
    {
        const pn_status status = config_path.empty()
                                     ? pn_config_create(&config.handle)
                                     : pn_config_load(config_path.c_str(), &config.handle);
        if (status != PN_OK) return finish(status);
    }
    const auto setConfig = [&](const std::string& key, const std::string& value) {
        return pn_config_set(config.handle, key.c_str(), value.c_str());
    };
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects KEY=VALUE, got '%s'\n", kv.c_str());
            return PN_ERROR_USAGE;
        }
        if (const pn_status s = setConfig(kv.substr(0, eq), kv.substr(eq + 1)); s != PN_OK)
            return finish(s);
    }
    if (!seed_override.empty())
        if (const pn_status s = setConfig("seed", seed_override); s != PN_OK) return finish(s);
    if (!workers_override.empty())
        if (const pn_status s = setConfig("workers", workers_override); s != PN_OK)
            return finish(s);

    // Per-subcommand config flags map onto plain config keys.
    const auto applyIf = [&](const std::string& key, const std::string& value) -> pn_status {
        return value.empty() ? PN_OK : setConfig(key, value);
    };

    if (filter->parsed()) {
        if (max_angle > 0.0)
            if (const pn_status s = setConfig("max_angle", std::to_string(max_angle));
                s != PN_OK)
                return finish(s);
        return finish(pn_filter_views(config.handle, poses.c_str(), kept_out.c_str()));
    }
    if (refine->parsed())
        return finish(pn_refine_masks(config.handle, fines_dir.c_str(), rough_dir.c_str(),
                                      refine_out.c_str()));
    if (evalseg->parsed())
        return finish(pn_eval_seg(pred_dir.c_str(), gt_dir.c_str(), seg_csv.c_str()));
    if (exportc->parsed()) {
        if (const pn_status s = applyIf("iso", iso_value); s != PN_OK) return finish(s);
        if (const pn_status s = applyIf("export_density", export_density); s != PN_OK)
            return finish(s);
        if (const pn_status s = applyIf("seed", export_seed); s != PN_OK) return finish(s);
        return finish(pn_export_cloud(config.handle, grid_json.c_str(), export_ply.c_str()));
    }
    if (cluster->parsed()) {
        if (const pn_status s = applyIf("eps", eps_value); s != PN_OK) return finish(s);
        if (const pn_status s = applyIf("min_pts", min_pts_value); s != PN_OK) return finish(s);
        return finish(pn_cluster(config.handle, cluster_in.c_str(), panicle_ply.c_str(),
                                 label_ply.c_str(),
                                 report_json.empty() ? nullptr : report_json.c_str()));
    }
    if (calib_cmd->parsed()) {
        if (const pn_status s = applyIf("label_length_cm", length_cm_value); s != PN_OK)
            return finish(s);
        return finish(pn_calibrate(config.handle, calib_label.c_str(), calib_out.c_str()));
    }
    if (length_cmd->parsed())
        return finish(pn_length(config.handle, len_panicle.c_str(), len_calib.c_str(),
                                len_csv.c_str()));
    if (volume_cmd->parsed()) {
        if (const pn_status s = applyIf("voxel", voxel_value); s != PN_OK) return finish(s);
        return finish(pn_volume(config.handle, vol_panicle.c_str(), vol_calib.c_str(),
                                vol_csv.c_str()));
    }
    if (evalreg->parsed())
        return finish(pn_eval_regression(pairs_csv.c_str(), evalreg_out.c_str()));
    if (synth_cmd->parsed())
        return finish(pn_synth(synth_kind.c_str(), synth_seed, synth_out.c_str(),
                               synth_grid ? 1 : 0));
    if (run_cmd->parsed())
        return finish(pn_run_sample(config.handle, run_sample_dir.c_str(), run_out.c_str()));
    if (batch_cmd->parsed()) {
        size_t failures = 0;
        const pn_status status =
            pn_run_batch(config.handle, batch_root.c_str(), batch_out.c_str(), &failures);
        if (status == PN_OK && failures > 0)
            std::fprintf(stderr, "warning: %zu sample(s) failed; see errors.csv\n", failures);
        return finish(status);
    }
    return PN_ERROR_USAGE;
}

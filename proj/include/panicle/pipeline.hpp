#ifndef PANICLE_PIPELINE_HPP
#define PANICLE_PIPELINE_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "panicle/types.hpp"

namespace panicle {

// Every tunable of the pipeline, loadable from a flat key=value file.
// Unknown keys are rejected.
struct PipelineConfig {
    double max_angle = 20.0;
    std::size_t min_area = 10000;
    double min_stability = 0.8;
    int erosion_radius = 5;
    std::size_t n_samples = 200;
    double containment_min = 0.5;
    double eps = 0.0;  // <= 0: auto from median nearest-neighbor spacing
    std::size_t min_pts = 10;
    double min_cluster_frac = 0.01;
    double max_planarity = 0.02;
    double min_normal_concentration = 0.9;
    std::size_t normals_k = 16;
    double label_length_cm = 7.5;
    double iso = std::numeric_limits<double>::quiet_NaN();  // non-finite: Otsu
    double export_density = 5e4;
    double theta_max = 60.0;
    std::vector<int> tangent_scales{1, 3};
    double voxel = 0.01;
    double downsample_frac = 0.005;   // skeleton downsample leaf / bounding diagonal
    double node_spacing_frac = 0.03;  // skeleton node spacing / bounding diagonal
    std::size_t lbc_k = 16;
    double lbc_w_l = 1.0;
    double lbc_w_h = 1.0;
    double lbc_s_l = 3.0;
    int lbc_max_iters = 20;
    double lbc_converge = 0.01;
    double curve_smooth = 1e-3;
    std::uint64_t seed = 7;
    std::size_t workers = 1;

    void set(const std::string& key, const std::string& value);
    static PipelineConfig load(const std::string& path);
    // load() from $PANICLE_CONFIG when set, otherwise defaults.
    static PipelineConfig fromEnvironment();
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct SampleResult {
    std::string sample_id;
    std::optional<double> L_cm;
    std::optional<double> L1;
    std::optional<double> x1;
    std::optional<std::size_t> num_voxels;
    std::optional<double> V_cm3;
    std::vector<StageTiming> timings;
    std::vector<std::string> warnings;
    // Set when a stage failed; the failing stage name is recorded too.
    std::optional<std::string> error;
    std::string failed_stage;
};

struct BatchResult {
    std::vector<SampleResult> samples;  // sorted by sample_id
    std::size_t failure_count = 0;
};

// --- per-stage entry points (the CLI subcommands call these) ---

void filterViewsFile(const PipelineConfig& config, const std::string& poses_json,
                     const std::string& out_json);
void refineMasksDir(const PipelineConfig& config, const std::string& fines_dir,
                    const std::string& rough_dir, const std::string& out_dir);
void evalSegDir(const std::string& pred_dir, const std::string& gt_dir,
                const std::string& out_csv);
void exportCloudFile(const PipelineConfig& config, const std::string& grid_json,
                     const std::string& out_ply);
void clusterFile(const PipelineConfig& config, const std::string& in_ply,
                 const std::string& out_panicle_ply, const std::string& out_label_ply,
                 const std::string& report_json);
void calibrateFile(const PipelineConfig& config, const std::string& label_ply,
                   const std::string& out_json);
void lengthFile(const PipelineConfig& config, const std::string& panicle_ply,
                const std::string& calib_json, const std::string& out_csv);
void volumeFile(const PipelineConfig& config, const std::string& panicle_ply,
                const std::string& calib_json, const std::string& out_csv);
void synthFile(const std::string& kind, std::uint64_t seed, const std::string& out_dir,
               bool with_grid);

// Runs whichever stages the sample directory provides inputs for
// (view filter -> mask refine -> export -> cluster -> calibrate -> length
// -> volume). Stage errors are captured in the result, not thrown.
SampleResult runSample(const PipelineConfig& config, const std::string& sample_dir,
                       const std::string& out_dir);

// Worker pool over every subdirectory of root; writes traits.csv,
// summary.csv, errors.csv (deterministic) and timings.txt (diagnostics)
// into out_dir. Throws when root has no sample directories.
BatchResult runBatch(const PipelineConfig& config, const std::string& root_dir,
                     const std::string& out_dir);

}  // namespace panicle

#endif

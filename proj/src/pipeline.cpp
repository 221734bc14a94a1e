#include "panicle/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "panicle/cloud_ops.hpp"
#include "panicle/eval.hpp"
#include "panicle/field_export.hpp"
#include "panicle/io.hpp"
#include "panicle/rng.hpp"
#include "panicle/segmentation.hpp"
#include "panicle/synth.hpp"
#include "panicle/traits.hpp"
#include "panicle/view_filter.hpp"

namespace panicle {

namespace {
namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double parseDouble(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': invalid numeric value '" + value + "'");
    }
}

std::uint64_t parseUnsigned(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size() || v < 0) throw std::invalid_argument(value);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw UsageError("config key '" + key + "': invalid nonnegative integer '" + value + "'");
    }
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
    if (key == "max_angle") max_angle = parseDouble(key, value);
    else if (key == "min_area") min_area = static_cast<std::size_t>(parseUnsigned(key, value));
    else if (key == "min_stability") min_stability = parseDouble(key, value);
    else if (key == "erosion_radius") erosion_radius = static_cast<int>(parseUnsigned(key, value));
    else if (key == "n_samples") n_samples = static_cast<std::size_t>(parseUnsigned(key, value));
    else if (key == "containment_min") containment_min = parseDouble(key, value);
    else if (key == "eps") eps = value == "auto" ? 0.0 : parseDouble(key, value);
    else if (key == "min_pts") min_pts = static_cast<std::size_t>(parseUnsigned(key, value));
    else if (key == "min_cluster_frac") min_cluster_frac = parseDouble(key, value);
    else if (key == "max_planarity") max_planarity = parseDouble(key, value);
    else if (key == "min_normal_concentration") min_normal_concentration = parseDouble(key, value);
    else if (key == "normals_k") normals_k = static_cast<std::size_t>(parseUnsigned(key, value));
    else if (key == "label_length_cm") label_length_cm = parseDouble(key, value);
    else if (key == "iso") iso = value == "auto" ? std::numeric_limits<double>::quiet_NaN()
                                                 : parseDouble(key, value);
    else if (key == "export_density") export_density = parseDouble(key, value);
    else if (key == "theta_max") theta_max = parseDouble(key, value);
    else if (key == "tangent_scales") {
        std::vector<int> scales;
        std::istringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ','))
            scales.push_back(static_cast<int>(parseUnsigned(key, tok)));
        if (scales.empty()) throw UsageError("config key 'tangent_scales': empty list");
        tangent_scales = scales;
    }
    else if (key == "voxel") voxel = parseDouble(key, value);
    else if (key == "downsample_frac") downsample_frac = parseDouble(key, value);
    else if (key == "node_spacing_frac") node_spacing_frac = parseDouble(key, value);
    else if (key == "lbc_k") lbc_k = static_cast<std::size_t>(parseUnsigned(key, value));
    else if (key == "lbc_w_l") lbc_w_l = parseDouble(key, value);
    else if (key == "lbc_w_h") lbc_w_h = parseDouble(key, value);
    else if (key == "lbc_s_l") lbc_s_l = parseDouble(key, value);
    else if (key == "lbc_max_iters") lbc_max_iters = static_cast<int>(parseUnsigned(key, value));
    else if (key == "lbc_converge") lbc_converge = parseDouble(key, value);
    else if (key == "curve_smooth") curve_smooth = parseDouble(key, value);
    else if (key == "seed") seed = parseUnsigned(key, value);
    else if (key == "workers") workers = static_cast<std::size_t>(parseUnsigned(key, value));
    else throw UsageError("unknown config key '" + key + "'");
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    PipelineConfig config;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
        config.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return config;
}

PipelineConfig PipelineConfig::fromEnvironment() {
    if (const char* path = std::getenv("PANICLE_CONFIG")) return load(path);
    return {};
}

// --------------------------------------------------------------------------
// stage entry points

void filterViewsFile(const PipelineConfig& config, const std::string& poses_json,
                     const std::string& out_json) {
    const ViewSet views = readPoses(poses_json);
    const Vec3 center = sceneCenter(views);
    writeKeptViews(filterViews(views, center, config.max_angle), center, out_json);
}

namespace {

bool isMaskFile(const fs::path& p) {
    const std::string ext = p.extension().string();
    return ext == ".png" || ext == ".pgm" || ext == ".PNG" || ext == ".PGM";
}

std::vector<fs::path> sortedMaskFiles(const fs::path& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) return files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && isMaskFile(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<CandidateMask> loadFines(const fs::path& fines_dir, const PipelineConfig& config) {
    std::map<std::string, double> stability;
    const fs::path sidecar = fines_dir / "stability.json";
    if (fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        json j;
        try {
            in >> j;
            for (const auto& [k, v] : j.items()) stability[k] = v.get<double>();
        } catch (const json::exception& e) {
            throw DataError("malformed stability sidecar " + sidecar.string() + ": " + e.what());
        }
    }
    std::vector<CandidateMask> fines;
    for (const fs::path& file : sortedMaskFiles(fines_dir)) {
        CandidateMask cand;
        cand.mask = readMask(file.string());
        const auto it = stability.find(file.filename().string());
        cand.stability = it != stability.end() ? it->second : 1.0;  // unscored: keep
        fines.push_back(std::move(cand));
    }
    return filterCandidates(fines, config.min_area, config.min_stability);
}

}  // namespace

void refineMasksDir(const PipelineConfig& config, const std::string& fines_dir,
                    const std::string& rough_dir, const std::string& out_dir) {
    const auto rough_files = sortedMaskFiles(rough_dir);
    if (rough_files.empty()) throw DataError("no rough masks in " + rough_dir);
    const std::vector<CandidateMask> fines = loadFines(fines_dir, config);
    fs::create_directories(out_dir);
    for (const fs::path& file : rough_files) {
        RoughInstance rough;
        rough.mask = readMask(file.string());
        const std::string name = file.filename().string();
        rough.class_label = name.find("label") != std::string::npos ? InstanceClass::Label
                                                                    : InstanceClass::Panicle;
        if (rough.mask.emptyMask()) throw DataError("empty rough mask: " + file.string());
        const MergeResult merged =
            matchAndMerge(rough, fines, config.erosion_radius, config.n_samples,
                          Rng::mix(config.seed, name), config.containment_min);
        writeMask(merged.mask, (fs::path(out_dir) / name).string());
    }
}

void evalSegDir(const std::string& pred_dir, const std::string& gt_dir,
                const std::string& out_csv) {
    const auto preds = sortedMaskFiles(pred_dir);
    if (preds.empty()) throw DataError("no prediction masks in " + pred_dir);
    std::ofstream out(out_csv);
    if (!out) throw DataError("cannot open for writing: " + out_csv);
    out << "image,precision,recall,f1,iou,bo\n";
    double sp = 0, sr = 0, sf = 0, si = 0, sb = 0;
    std::size_t n = 0;
    for (const fs::path& pred_file : preds) {
        const fs::path gt_file = fs::path(gt_dir) / pred_file.filename();
        if (!fs::exists(gt_file)) continue;
        const BinaryMask pred = readMask(pred_file.string());
        const BinaryMask gt = readMask(gt_file.string());
        const SegMetrics m = segMetrics(pred, gt);
        const double bo = boundaryOverlap(pred, gt);
        out << pred_file.filename().string() << "," << fmt(m.precision) << "," << fmt(m.recall)
            << "," << fmt(m.f1) << "," << fmt(m.iou) << "," << fmt(bo) << "\n";
        sp += m.precision;
        sr += m.recall;
        sf += m.f1;
        si += m.iou;
        sb += bo;
        ++n;
    }
    if (n == 0) throw DataError("no prediction/ground-truth filename pairs matched");
    const double dn = static_cast<double>(n);
    out << "mean," << fmt(sp / dn) << "," << fmt(sr / dn) << "," << fmt(sf / dn) << ","
        << fmt(si / dn) << "," << fmt(sb / dn) << "\n";
}

void exportCloudFile(const PipelineConfig& config, const std::string& grid_json,
                     const std::string& out_ply) {
    const DensityGrid grid = readGrid(grid_json);
    const PointCloud cloud =
        exportCloud(grid, config.iso, config.export_density, Rng::mix(config.seed, "export"));
    writePly(cloud, out_ply);
}

namespace {

struct ClusterOutcome {
    SemanticClouds semantics;
    std::size_t total_clusters = 0;
    std::size_t kept_clusters = 0;
    double eps_used = 0.0;
};

ClusterOutcome clusterCloud(const PipelineConfig& config, const PointCloud& cloud) {
    ClusterOutcome outcome;
    outcome.eps_used = config.eps > 0.0 ? config.eps : autoEps(cloud, config.min_pts);
    const Clustering clustering = dbscan(cloud, outcome.eps_used, config.min_pts);
    outcome.total_clusters = clustering.clusterCount();
    const std::size_t min_size = std::max<std::size_t>(
        config.min_pts,
        static_cast<std::size_t>(config.min_cluster_frac * static_cast<double>(cloud.size())));
    const FilteredClusters filtered = removeSmallClusters(clustering, cloud, min_size);
    outcome.kept_clusters = filtered.clusters.size();
    outcome.semantics =
        classifyClusters(filtered.clusters, config.max_planarity,
                         config.min_normal_concentration, config.normals_k);
    return outcome;
}

}  // namespace

void clusterFile(const PipelineConfig& config, const std::string& in_ply,
                 const std::string& out_panicle_ply, const std::string& out_label_ply,
                 const std::string& report_json) {
    const PointCloud cloud = readPly(in_ply);
    const ClusterOutcome outcome = clusterCloud(config, cloud);
    writePly(outcome.semantics.panicle, out_panicle_ply);
    writePly(outcome.semantics.label, out_label_ply);
    if (!report_json.empty()) {
        json j;
        j["eps"] = outcome.eps_used;
        j["clusters_total"] = outcome.total_clusters;
        j["clusters_kept"] = outcome.kept_clusters;
        j["label_points"] = outcome.semantics.label.size();
        j["panicle_points"] = outcome.semantics.panicle.size();
        j["low_confidence"] = outcome.semantics.low_confidence;
        json feats = json::array();
        for (const ClusterFeatures& f : outcome.semantics.features)
            feats.push_back({{"size", f.size},
                             {"planarity", f.planarity},
                             {"normal_concentration", f.normal_concentration}});
        j["cluster_features"] = feats;
        std::ofstream out(report_json);
        if (!out) throw DataError("cannot open for writing: " + report_json);
        out << j.dump(2) << "\n";
    }
}

void calibrateFile(const PipelineConfig& config, const std::string& label_ply,
                   const std::string& out_json) {
    writeCalibration(calibrate(readPly(label_ply), config.label_length_cm), out_json);
}

namespace {

struct LengthMeasurement {
    double l1 = 0.0;
    double length_cm = 0.0;
    bool low_confidence = false;
};

LengthMeasurement measureLength(const PipelineConfig& config, const PointCloud& panicle,
                                const Calibration& calib) {
    Vec3 mn = panicle.points.at(0), mx = mn;
    for (const Vec3& p : panicle.points)
        for (int a = 0; a < 3; ++a) {
            mn[a] = std::min(mn[a], p[a]);
            mx[a] = std::max(mx[a], p[a]);
        }
    const double diag = (mx - mn).norm();
    PointCloud compact = voxelDownsample(panicle, config.downsample_frac * diag);
    if (compact.size() < config.lbc_k + 1) compact = panicle;

    LbcParams params;
    params.k_neighbors = config.lbc_k;
    params.w_l_init = config.lbc_w_l;
    params.w_h_init = config.lbc_w_h;
    params.s_l = config.lbc_s_l;
    params.max_iters = config.lbc_max_iters;
    params.converge_ratio = config.lbc_converge;
    const LbcResult contracted = lbcContract(compact, params);

    const SkeletonGraph skeleton =
        buildSkeleton(contracted.contracted, config.node_spacing_frac, 8,
                      &contracted.surface_edges, &compact.points);
    const MainPath path = mainPath(skeleton, config.theta_max, config.tangent_scales);

    LengthMeasurement m;
    m.l1 = fitCurveLength(path, skeleton, config.curve_smooth);
    m.length_cm = panicleLength(m.l1, calib);
    m.low_confidence = path.low_confidence;
    return m;
}

void writeTraitsCsv(const std::string& path, const std::vector<SampleResult>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "sample_id,L_cm,L1,x1,num_voxels,V_cm3,warnings\n";
    for (const SampleResult& r : rows) {
        if (r.error) continue;
        out << r.sample_id << ",";
        if (r.L_cm) out << fmt(*r.L_cm);
        out << ",";
        if (r.L1) out << fmt(*r.L1);
        out << ",";
        if (r.x1) out << fmt(*r.x1);
        out << ",";
        if (r.num_voxels) out << *r.num_voxels;
        out << ",";
        if (r.V_cm3) out << fmt(*r.V_cm3);
        out << ",";
        for (std::size_t i = 0; i < r.warnings.size(); ++i)
            out << (i ? ";" : "") << r.warnings[i];
        out << "\n";
    }
}

}  // namespace

void lengthFile(const PipelineConfig& config, const std::string& panicle_ply,
                const std::string& calib_json, const std::string& out_csv) {
    const PointCloud panicle = readPly(panicle_ply);
    const Calibration calib = readCalibration(calib_json);
    const LengthMeasurement m = measureLength(config, panicle, calib);
    SampleResult row;
    row.sample_id = fs::path(panicle_ply).stem().string();
    row.L_cm = m.length_cm;
    row.L1 = m.l1;
    row.x1 = calib.x1;
    if (m.low_confidence) row.warnings.push_back("main_path_low_confidence");
    writeTraitsCsv(out_csv, {row});
}

void volumeFile(const PipelineConfig& config, const std::string& panicle_ply,
                const std::string& calib_json, const std::string& out_csv) {
    const PointCloud panicle = readPly(panicle_ply);
    const Calibration calib = readCalibration(calib_json);
    const VolumeResult v = panicleVolume(panicle, calib, config.voxel);
    SampleResult row;
    row.sample_id = fs::path(panicle_ply).stem().string();
    row.x1 = calib.x1;
    row.num_voxels = v.num_voxels;
    row.V_cm3 = v.volume_cm3;
    writeTraitsCsv(out_csv, {row});
}

void synthFile(const std::string& kind, std::uint64_t seed, const std::string& out_dir,
               bool with_grid) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    if (kind == "panicle") {
        Rng rng(Rng::mix(seed, "scene"));
        const double scale = std::exp(rng.uniform(std::log(0.05), std::log(0.4)));
        const synth::Placement pose =
            synth::randomPlacement(Rng::mix(seed, "pose"), scale, 2.0 * scale);
        synth::LabelSpec label_spec;
        label_spec.noise_sigma_cm = 0.015;
        label_spec.density_per_cm2 = 60.0;  // comparable to the panicle surface density
        const synth::SynthScene scene =
            synth::genScene(synth::defaultPanicleSpec(seed), label_spec, pose, seed);
        writePly(scene.scene, (dir / "cloud.ply").string());
        writePly(scene.panicle, (dir / "panicle.ply").string());
        writePly(scene.label, (dir / "label.ply").string());
        json truth;
        truth["rachis_arc_length_cm"] = scene.truth.rachis_arc_length_cm;
        truth["occupied_volume_cm3"] = scene.truth.occupied_volume_cm3;
        truth["label_length_cm"] = scene.truth.label_length_cm;
        std::ofstream out(dir / "truth.json");
        out << truth.dump(2) << "\n";
        if (with_grid) {
            synth::GridShape shape;
            shape.kind = synth::GridShapeKind::Panicle;
            shape.panicle_spec = synth::defaultPanicleSpec(seed);
            const auto grid = synth::genDensityGrid(shape, {96, 96, 96}, {0.35, 0.35, 0.35});
            writeGrid(grid, (dir / "grid.json").string());
        }
    } else if (kind == "sphere" || kind == "box") {
        synth::GridShape shape;
        shape.kind = kind == "sphere" ? synth::GridShapeKind::Sphere : synth::GridShapeKind::Box;
        shape.radius = 1.0;
        shape.box_half = {0.8, 0.6, 0.4};
        const auto grid = synth::genDensityGrid(shape, {65, 65, 65}, {0.05, 0.05, 0.05});
        writeGrid(grid, (dir / "grid.json").string());
    } else {
        throw UsageError("synth: unknown kind '" + kind + "' (expected panicle, sphere or box)");
    }
}

// --------------------------------------------------------------------------
// sample and batch runners

namespace {

class StageClock {
public:
    explicit StageClock(SampleResult& result) : result_(result) {}

    template <typename F>
    void run(const std::string& stage, F&& body) {
        const auto start = std::chrono::steady_clock::now();
        try {
            body();
        } catch (...) {
            record(stage, start);
            throw;
        }
        record(stage, start);
    }

private:
    void record(const std::string& stage, std::chrono::steady_clock::time_point start) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        result_.timings.push_back({stage, dt.count()});
    }

    SampleResult& result_;
};

}  // namespace

SampleResult runSample(const PipelineConfig& base_config, const std::string& sample_dir,
                       const std::string& out_dir) {
    const fs::path in(sample_dir);
    const fs::path out(out_dir);
    SampleResult result;
    result.sample_id = in.filename().string();
    if (result.sample_id.empty()) result.sample_id = in.parent_path().filename().string();

    PipelineConfig config = base_config;
    config.seed = Rng::mix(base_config.seed, result.sample_id);

    StageClock clock(result);
    std::string stage = "setup";
    try {
        fs::create_directories(out);

        if (fs::exists(in / "poses.json")) {
            stage = "view_filter";
            clock.run(stage, [&] {
                filterViewsFile(config, (in / "poses.json").string(),
                                (out / "kept.json").string());
            });
        }

        if (fs::is_directory(in / "masks")) {
            stage = "mask_refine";
            clock.run(stage, [&] {
                std::vector<fs::path> sets;
                if (fs::is_directory(in / "masks" / "fines"))
                    sets.push_back(in / "masks");
                else
                    for (const auto& entry : fs::directory_iterator(in / "masks"))
                        if (entry.is_directory() && fs::is_directory(entry.path() / "fines"))
                            sets.push_back(entry.path());
                std::sort(sets.begin(), sets.end());
                if (sets.empty()) throw DataError("masks/ contains no fines/rough sets");
                for (const fs::path& set : sets) {
                    const std::string set_name =
                        set == in / "masks" ? "masks" : "masks_" + set.filename().string();
                    const fs::path set_out = out / set_name;
                    refineMasksDir(config, (set / "fines").string(), (set / "rough").string(),
                                   set_out.string());
                    if (fs::is_directory(set / "gt"))
                        evalSegDir(set_out.string(), (set / "gt").string(),
                                   (set_out / "seg_metrics.csv").string());
                    if (fs::exists(set / "image.png")) {
                        const ImageBuffer image = readImage((set / "image.png").string());
                        for (const fs::path& refined : sortedMaskFiles(set_out)) {
                            const BinaryMask mask = readMask(refined.string());
                            const ImageBuffer cut = applyMask(image, mask);
                            writeImage(cut, (set_out / (refined.stem().string() + "_rgba.png"))
                                                .string());
                        }
                    }
                }
            });
        }

        fs::path cloud_path = in / "cloud.ply";
        if (!fs::exists(cloud_path) && fs::exists(in / "grid.json")) {
            stage = "export";
            clock.run(stage, [&] {
                exportCloudFile(config, (in / "grid.json").string(),
                                (out / "cloud.ply").string());
            });
            cloud_path = out / "cloud.ply";
        }
        if (!fs::exists(cloud_path)) {
            if (result.timings.empty())
                throw DataError(
                    "no runnable inputs (expected cloud.ply, grid.json, poses.json or masks/)");
            return result;  // mask/view stages ran; nothing further available
        }

        stage = "cluster";
        PointCloud panicle, label;
        clock.run(stage, [&] {
            const PointCloud cloud = readPly(cloud_path.string());
            const ClusterOutcome outcome = clusterCloud(config, cloud);
            panicle = outcome.semantics.panicle;
            label = outcome.semantics.label;
            if (outcome.semantics.low_confidence)
                result.warnings.push_back("classify_low_confidence");
            writePly(panicle, (out / "panicle.ply").string());
            writePly(label, (out / "label.ply").string());
        });

        stage = "calibrate";
        Calibration calib;
        clock.run(stage, [&] {
            calib = calibrate(label, config.label_length_cm);
            writeCalibration(calib, (out / "calib.json").string());
        });
        result.x1 = calib.x1;

        stage = "length";
        clock.run(stage, [&] {
            const LengthMeasurement m = measureLength(config, panicle, calib);
            result.L1 = m.l1;
            result.L_cm = m.length_cm;
            if (m.low_confidence) result.warnings.push_back("main_path_low_confidence");
        });

        stage = "volume";
        clock.run(stage, [&] {
            const VolumeResult v = panicleVolume(panicle, calib, config.voxel);
            result.num_voxels = v.num_voxels;
            result.V_cm3 = v.volume_cm3;
        });

        writeTraitsCsv((out / "traits.csv").string(), {result});
    } catch (const std::exception& e) {
        result.error = e.what();
        result.failed_stage = stage;
    }
    return result;
}

namespace {

struct TruthRecord {
    double length_cm = 0.0;
    double volume_cm3 = 0.0;
    bool has_volume = false;
};

std::optional<TruthRecord> readTruth(const fs::path& sample_dir) {
    const fs::path path = sample_dir / "truth.json";
    if (!fs::exists(path)) return std::nullopt;
    std::ifstream in(path);
    json j;
    try {
        in >> j;
        TruthRecord t;
        t.length_cm = j.at("rachis_arc_length_cm").get<double>();
        if (j.contains("occupied_volume_cm3")) {
            t.volume_cm3 = j.at("occupied_volume_cm3").get<double>();
            t.has_volume = t.volume_cm3 > 0.0;
        }
        return t;
    } catch (const json::exception& e) {
        throw DataError("malformed truth file " + path.string() + ": " + e.what());
    }
}

}  // namespace

BatchResult runBatch(const PipelineConfig& config, const std::string& root_dir,
                     const std::string& out_dir) {
    const fs::path root(root_dir);
    if (!fs::is_directory(root)) throw DataError("batch root is not a directory: " + root_dir);
    std::vector<fs::path> samples;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const fs::path& dir = entry.path();
        if (fs::exists(dir / "cloud.ply") || fs::exists(dir / "grid.json") ||
            fs::exists(dir / "poses.json") || fs::is_directory(dir / "masks"))
            samples.push_back(dir);
    }
    if (samples.empty()) throw DataError("no sample directories under " + root_dir);
    std::sort(samples.begin(), samples.end());

    fs::create_directories(out_dir);
    BatchResult batch;
    batch.samples.resize(samples.size());

    const std::size_t workers = std::max<std::size_t>(1, config.workers);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= samples.size()) return;
            batch.samples[i] = runSample(config, samples[i].string(),
                                         (fs::path(out_dir) / samples[i].filename()).string());
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    std::sort(batch.samples.begin(), batch.samples.end(),
              [](const SampleResult& a, const SampleResult& b) {
                  return a.sample_id < b.sample_id;
              });
    for (const SampleResult& r : batch.samples)
        if (r.error) ++batch.failure_count;

    writeTraitsCsv((fs::path(out_dir) / "traits.csv").string(), batch.samples);

    {
        std::ofstream err((fs::path(out_dir) / "errors.csv"));
        err << "sample_id,stage,message\n";
        for (const SampleResult& r : batch.samples)
            if (r.error) err << r.sample_id << "," << r.failed_stage << ",\"" << *r.error
                             << "\"\n";
    }

    // Aggregates against ground truth where a sample provides one.
    PairedSeries length_series, volume_series;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const SampleResult& r = batch.samples[i];
        // batch.samples is sorted by id; look the directory up by name
        const auto truth = readTruth(root / r.sample_id);
        if (!truth || r.error) continue;
        if (r.L_cm) {
            length_series.predicted.push_back(*r.L_cm);
            length_series.measured.push_back(truth->length_cm);
        }
        if (r.V_cm3 && truth->has_volume) {
            volume_series.predicted.push_back(*r.V_cm3);
            volume_series.measured.push_back(truth->volume_cm3);
        }
    }
    {
        std::ofstream summary((fs::path(out_dir) / "summary.csv"));
        summary << "key,value\n";
        summary << "samples," << batch.samples.size() << "\n";
        summary << "failures," << batch.failure_count << "\n";
        const auto emit = [&](const std::string& trait, const PairedSeries& s) {
            summary << trait << "_n," << s.predicted.size() << "\n";
            if (s.predicted.size() < 2) return;
            double mean = 0.0, var = 0.0;
            for (const double v : s.measured) mean += v;
            mean /= static_cast<double>(s.measured.size());
            for (const double v : s.measured) var += (v - mean) * (v - mean);
            if (var > 0.0) summary << trait << "_r2," << fmt(rSquared(s)) << "\n";
            summary << trait << "_rmse," << fmt(rmse(s)) << "\n";
            if (mean != 0.0) summary << trait << "_rrmse_percent," << fmt(rrmse(s)) << "\n";
        };
        emit("length", length_series);
        emit("volume", volume_series);
    }

    // Stage timing table (diagnostic; wall-clock, so kept out of the CSVs).
    {
        std::map<std::string, std::pair<double, std::size_t>> by_stage;
        for (const SampleResult& r : batch.samples)
            for (const StageTiming& t : r.timings) {
                by_stage[t.stage].first += t.seconds;
                by_stage[t.stage].second += 1;
            }
        std::ofstream timing((fs::path(out_dir) / "timings.txt"));
        timing << "stage  mean_seconds  samples\n";
        for (const auto& [stage_name, acc] : by_stage)
            timing << stage_name << "  " << fmt(acc.first / static_cast<double>(acc.second))
                   << "  " << acc.second << "\n";
    }
    return batch;
}

}  // namespace panicle

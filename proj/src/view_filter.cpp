#include "panicle/view_filter.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace panicle {

namespace {
using nlohmann::json;

Vec3 vec3From(const json& arr) {
    return {arr.at(0).get<double>(), arr.at(1).get<double>(), arr.at(2).get<double>()};
}
}  // namespace

ViewSet readPoses(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pose file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("malformed pose JSON " + path + ": " + e.what());
    }
    if (!j.is_array()) throw DataError("pose file must be a JSON array: " + path);
    ViewSet views;
    std::size_t n = 0;
    for (const auto& rec : j) {
        CameraPose pose;
        try {
            if (rec.contains("transform")) {
                const auto& m = rec.at("transform");
                if (m.size() != 16) throw DataError("transform must have 16 entries");
                // camera-to-world, row-major; viewing direction is -R[:,2]
                pose.position = {m.at(3).get<double>(), m.at(7).get<double>(),
                                 m.at(11).get<double>()};
                pose.view_dir = {-m.at(2).get<double>(), -m.at(6).get<double>(),
                                 -m.at(10).get<double>()};
            } else {
                pose.position = vec3From(rec.at("position"));
                pose.view_dir = vec3From(rec.at("view_dir"));
            }
        } catch (const json::exception& e) {
            throw DataError("pose record " + std::to_string(n) + " in " + path + ": " + e.what());
        }
        const double norm = pose.view_dir.norm();
        if (norm <= 0.0 || !pose.view_dir.isFinite())
            throw DataError("pose record " + std::to_string(n) + ": zero or invalid view_dir");
        pose.view_dir = pose.view_dir / norm;
        views.poses.push_back(pose);
        views.image_ids.push_back(rec.contains("image_id")
                                      ? rec.at("image_id").get<std::string>()
                                      : std::to_string(n));
        ++n;
    }
    return views;
}

void writePoses(const ViewSet& views, const std::string& path) {
    json j = json::array();
    for (std::size_t i = 0; i < views.poses.size(); ++i) {
        const CameraPose& p = views.poses[i];
        j.push_back({{"image_id", views.image_ids[i]},
                     {"position", {p.position.x, p.position.y, p.position.z}},
                     {"view_dir", {p.view_dir.x, p.view_dir.y, p.view_dir.z}}});
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

Vec3 sceneCenter(const ViewSet& views) {
    if (views.poses.size() < 2)
        throw UsageError("sceneCenter: at least 2 poses required");
    // Solve sum_i (I - d_i d_i^T) c = sum_i (I - d_i d_i^T) p_i.
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d b = Eigen::Vector3d::Zero();
    for (const CameraPose& pose : views.poses) {
        const Eigen::Vector3d d(pose.view_dir.x, pose.view_dir.y, pose.view_dir.z);
        const Eigen::Vector3d p(pose.position.x, pose.position.y, pose.position.z);
        const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - d * d.transpose();
        A += proj;
        b += proj * p;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A);
    if (es.eigenvalues()[0] <= 1e-9 * std::max(1.0, es.eigenvalues()[2]))
        throw PipelineError("sceneCenter: degenerate geometry (view rays are parallel)");
    const Eigen::Vector3d c = A.ldlt().solve(b);
    return {c.x(), c.y(), c.z()};
}

std::vector<std::string> filterViews(const ViewSet& views, const Vec3& center,
                                     double max_angle_deg) {
    if (!(max_angle_deg > 0.0 && max_angle_deg < 180.0))
        throw UsageError("filterViews: max angle must lie in (0, 180) degrees");
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < views.poses.size(); ++i) {
        const CameraPose& pose = views.poses[i];
        const Vec3 to_center = center - pose.position;
        double angle_deg = 0.0;  // camera exactly at the center aims at it by definition
        const double dist = to_center.norm();
        if (dist > 0.0) {
            const double c = std::clamp(pose.view_dir.dot(to_center) / dist, -1.0, 1.0);
            angle_deg = std::acos(c) * 180.0 / M_PI;
        }
        if (angle_deg <= max_angle_deg) kept.push_back(views.image_ids[i]);
    }
    return kept;
}

void writeKeptViews(const std::vector<std::string>& kept, const Vec3& center,
                    const std::string& path) {
    nlohmann::json j;
    j["center"] = {center.x, center.y, center.z};
    j["kept"] = kept;
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace panicle

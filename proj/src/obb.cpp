#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "panicle/cloud_ops.hpp"
#include "panicle/geometry.hpp"

namespace panicle {

namespace {

// Third central moment of the projections; used to pick a canonical axis
// sign because it co-rotates exactly with the cloud.
double projectionSkew(const std::vector<Vec3>& pts, const Vec3& axis) {
    double mean = 0.0;
    for (const Vec3& p : pts) mean += p.dot(axis);
    mean /= static_cast<double>(pts.size());
    double m3 = 0.0;
    for (const Vec3& p : pts) {
        const double d = p.dot(axis) - mean;
        m3 += d * d * d;
    }
    return m3;
}

using P2 = std::array<double, 2>;

double cross2(const P2& o, const P2& a, const P2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

std::vector<P2> convexHull(std::vector<P2> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<P2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const P2& p : pts) {  // lower
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    const std::size_t lower = k + 1;
    for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {  // upper
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], *it) <= 0) --k;
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace

OrientedBoundingBox computeObb(const PointCloud& cloud) {
    if (cloud.size() < 3) throw UsageError("computeObb: at least 3 points required");
    const PcaResult pca = pcaEigen(cloud);
    if (pca.eigenvalues[1] <= 1e-12 * std::max(pca.eigenvalues[0], 1e-300))
        throw PipelineError("computeObb: rank-deficient (collinear) cloud");

    std::array<Vec3, 3> axes = pca.eigenvectors;
    std::array<double, 3> lo{}, hi{};
    const auto projectExtents = [&]() {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::numeric_limits<double>::infinity();
            hi[a] = -std::numeric_limits<double>::infinity();
        }
        for (const Vec3& p : cloud.points) {
            for (int a = 0; a < 3; ++a) {
                const double d = p.dot(axes[a]);
                lo[a] = std::min(lo[a], d);
                hi[a] = std::max(hi[a], d);
            }
        }
    };
    projectExtents();

    // Order axes by extent, largest first.
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ea = hi[a] - lo[a], eb = hi[b] - lo[b];
        return ea > eb || (ea == eb && a < b);
    });
    std::array<Vec3, 3> sorted;
    for (int a = 0; a < 3; ++a) sorted[a] = axes[order[a]];

    // Canonical signs: positive projection skew on the first two axes,
    // right-handed third. Keeps the frame stable under rigid motion.
    for (int a = 0; a < 2; ++a)
        if (projectionSkew(cloud.points, sorted[a]) < 0.0) sorted[a] = -sorted[a];
    sorted[2] = sorted[0].cross(sorted[1]);

    axes = sorted;
    projectExtents();

    OrientedBoundingBox box;
    box.axes = axes;
    Vec3 center{0, 0, 0};
    for (int a = 0; a < 3; ++a) {
        box.half_extents[a] = 0.5 * (hi[a] - lo[a]);
        center += axes[a] * (0.5 * (hi[a] + lo[a]));
    }
    box.center = center;
    return box;
}

Rect2D minAreaRect(const std::vector<P2>& pts) {
    if (pts.empty()) throw UsageError("minAreaRect: no points");
    const std::vector<P2> hull = convexHull(pts);
    Rect2D best;
    if (hull.size() < 3) {
        // Degenerate: all points collinear; length along the segment.
        double best_d2 = 0.0;
        for (const P2& a : hull)
            for (const P2& b : hull) {
                const double dx = a[0] - b[0], dy = a[1] - b[1];
                best_d2 = std::max(best_d2, dx * dx + dy * dy);
            }
        best.long_side = std::sqrt(best_d2);
        best.short_side = 0.0;
        return best;
    }
    double best_area = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const P2& a = hull[i];
        const P2& b = hull[(i + 1) % hull.size()];
        double ux = b[0] - a[0], uy = b[1] - a[1];
        const double len = std::hypot(ux, uy);
        if (len <= 0.0) continue;
        ux /= len;
        uy /= len;
        double minu = std::numeric_limits<double>::infinity(), maxu = -minu;
        double minv = minu, maxv = -minu;
        for (const P2& p : hull) {
            const double u = p[0] * ux + p[1] * uy;
            const double v = -p[0] * uy + p[1] * ux;
            minu = std::min(minu, u);
            maxu = std::max(maxu, u);
            minv = std::min(minv, v);
            maxv = std::max(maxv, v);
        }
        const double w = maxu - minu, h = maxv - minv;
        if (w * h < best_area) {
            best_area = w * h;
            best.long_side = std::max(w, h);
            best.short_side = std::min(w, h);
            best.long_axis = w >= h ? P2{ux, uy} : P2{-uy, ux};
        }
    }
    return best;
}

namespace {

// Support length along an axis. Two estimates: the raw enclosing extent,
// and a trimmed fit where the mean of the outer beta-fraction sits
// beta*L/2 inside each edge of a uniformly filled plate, so
// (hi - lo)/(1 - beta) recovers the extent while Gaussian noise tails
// average out instead of inflating it. The minimum keeps noiseless inputs
// exact (extent wins) and noisy ones unbiased (trimmed fit wins).
double supportLength(std::vector<double> u, double beta) {
    std::sort(u.begin(), u.end());
    const std::size_t n = u.size();
    const double enclosing = u.back() - u.front();
    const std::size_t k = std::clamp<std::size_t>(
        static_cast<std::size_t>(beta * static_cast<double>(n)), 1, std::max<std::size_t>(n / 4, 1));
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        lo += u[i];
        hi += u[n - 1 - i];
    }
    const double used_beta = static_cast<double>(k) / static_cast<double>(n);
    const double trimmed = (hi - lo) / static_cast<double>(k) / (1.0 - used_beta);
    return std::min(enclosing, trimmed);
}

}  // namespace

Calibration calibrate(const PointCloud& label_cloud, double real_length_cm) {
    if (real_length_cm <= 0.0) throw UsageError("calibrate: label length must be positive");
    const OrientedBoundingBox box = computeObb(label_cloud);

    // Face areas 4*h1*h2 >= 4*h1*h3 >= 4*h2*h3; the median-area face is
    // spanned by axes 0 and 2. Project onto it, orient with the tightest
    // rectangle, and fit the label length along its long side.
    std::vector<std::array<double, 2>> projected;
    projected.reserve(label_cloud.size());
    for (const Vec3& p : label_cloud.points) {
        const Vec3 d = p - box.center;
        projected.push_back({d.dot(box.axes[0]), d.dot(box.axes[2])});
    }
    const Rect2D rect = minAreaRect(projected);
    if (rect.long_side <= 1e-9)
        throw PipelineError("calibrate: degenerate label (zero length)");

    std::vector<double> along;
    along.reserve(projected.size());
    for (const auto& p : projected)
        along.push_back(p[0] * rect.long_axis[0] + p[1] * rect.long_axis[1]);

    Calibration calib;
    calib.x1 = supportLength(std::move(along), 0.04);
    calib.label_length_cm = real_length_cm;
    calib.scale_cm_per_unit = real_length_cm / calib.x1;
    calib.normalize_factor = 1.0 / calib.x1;
    calib.frame_origin = box.center;
    calib.frame_axes = box.axes;
    return calib;
}

Calibration readCalibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open calibration file: " + path);
    nlohmann::json j;
    try {
        in >> j;
        Calibration c;
        c.x1 = j.at("x1").get<double>();
        c.label_length_cm = j.at("label_length_cm").get<double>();
        c.scale_cm_per_unit = j.at("scale_cm_per_unit").get<double>();
        c.normalize_factor = j.at("normalize_factor").get<double>();
        const auto& o = j.at("frame_origin");
        c.frame_origin = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
        const auto& ax = j.at("frame_axes");
        for (int a = 0; a < 3; ++a)
            c.frame_axes[a] = {ax.at(a).at(0).get<double>(), ax.at(a).at(1).get<double>(),
                               ax.at(a).at(2).get<double>()};
        if (c.x1 <= 0.0) throw DataError("calibration x1 must be positive: " + path);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed calibration " + path + ": " + e.what());
    }
}

void writeCalibration(const Calibration& calib, const std::string& path) {
    nlohmann::json j;
    j["x1"] = calib.x1;
    j["label_length_cm"] = calib.label_length_cm;
    j["scale_cm_per_unit"] = calib.scale_cm_per_unit;
    j["normalize_factor"] = calib.normalize_factor;
    j["frame_origin"] = {calib.frame_origin.x, calib.frame_origin.y, calib.frame_origin.z};
    j["frame_axes"] = nlohmann::json::array();
    for (const Vec3& a : calib.frame_axes) j["frame_axes"].push_back({a.x, a.y, a.z});
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace panicle

#include <cmath>
#include <unordered_set>

#include <Eigen/Dense>

#include "panicle/traits.hpp"

namespace panicle {

namespace {

// Natural cubic smoothing spline per coordinate (Reinsch / Green-Silverman):
// solve (R + lambda Q^T Q) gamma = Q^T y, fitted values g = y - lambda Q gamma,
// gamma are the second derivatives at the interior knots.
struct SmoothedCurve {
    std::vector<double> t;                 // knots
    std::array<Eigen::VectorXd, 3> g;      // fitted values per coordinate
    std::array<Eigen::VectorXd, 3> gamma;  // second derivatives (natural: 0 at ends)

    Vec3 eval(std::size_t seg, double x) const {
        const double h = t[seg + 1] - t[seg];
        const double a = t[seg + 1] - x, b = x - t[seg];
        Vec3 p;
        for (int c = 0; c < 3; ++c) {
            const double g0 = g[c][seg], g1 = g[c][seg + 1];
            const double m0 = gamma[c][seg], m1 = gamma[c][seg + 1];
            p[c] = m0 * a * a * a / (6.0 * h) + m1 * b * b * b / (6.0 * h) +
                   (g0 / h - m0 * h / 6.0) * a + (g1 / h - m1 * h / 6.0) * b;
        }
        return p;
    }
};

SmoothedCurve fitSmoothingSpline(const std::vector<Vec3>& nodes, double lambda) {
    const std::size_t n = nodes.size();
    SmoothedCurve curve;
    curve.t.resize(n);
    curve.t[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        curve.t[i] = curve.t[i - 1] + (nodes[i] - nodes[i - 1]).norm();

    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = curve.t[i + 1] - curve.t[i];

    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(ni, ni - 2);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(ni - 2, ni - 2);
    for (Eigen::Index c = 0; c < ni - 2; ++c) {
        const std::size_t i = static_cast<std::size_t>(c) + 1;  // interior knot
        Q(c, c) = 1.0 / h[i - 1];
        Q(c + 1, c) = -1.0 / h[i - 1] - 1.0 / h[i];
        Q(c + 2, c) = 1.0 / h[i];
        R(c, c) = (h[i - 1] + h[i]) / 3.0;
        if (c + 1 < ni - 2) {
            R(c, c + 1) = h[i] / 6.0;
            R(c + 1, c) = h[i] / 6.0;
        }
    }
    const Eigen::MatrixXd lhs = R + lambda * (Q.transpose() * Q);
    const auto solver = lhs.ldlt();
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd y(ni);
        for (Eigen::Index i = 0; i < ni; ++i) y[i] = nodes[static_cast<std::size_t>(i)][c];
        const Eigen::VectorXd gi = solver.solve(Q.transpose() * y);
        curve.g[c] = y - lambda * (Q * gi);
        curve.gamma[c] = Eigen::VectorXd::Zero(ni);
        curve.gamma[c].segment(1, ni - 2) = gi;
    }
    return curve;
}

}  // namespace

double fitCurveLength(const std::vector<Vec3>& path_nodes, double smooth_weight,
                      int samples_per_segment) {
    if (path_nodes.size() < 2) throw UsageError("fitCurveLength: need at least 2 nodes");
    // Collapse coincident consecutive nodes; they carry no chord span.
    std::vector<Vec3> nodes;
    nodes.push_back(path_nodes[0]);
    for (std::size_t i = 1; i < path_nodes.size(); ++i)
        if ((path_nodes[i] - nodes.back()).norm() > 0.0) nodes.push_back(path_nodes[i]);
    if (nodes.size() < 2) return 0.0;
    if (nodes.size() == 2) return (nodes[1] - nodes[0]).norm();

    double chord = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) chord += (nodes[i] - nodes[i - 1]).norm();
    const double mean_h = chord / static_cast<double>(nodes.size() - 1);
    // lambda ~ length^3 keeps the fit invariant under uniform scaling; the
    // mean-spacing^2 factor damps per-node jitter without flattening the
    // low-frequency shape.
    const double lambda = smooth_weight * chord * mean_h * mean_h;

    const SmoothedCurve curve = fitSmoothingSpline(nodes, lambda);
    double length = 0.0;
    for (std::size_t seg = 0; seg + 1 < nodes.size(); ++seg) {
        Vec3 prev = curve.eval(seg, curve.t[seg]);
        for (int s = 1; s <= samples_per_segment; ++s) {
            const double x = curve.t[seg] +
                             (curve.t[seg + 1] - curve.t[seg]) *
                                 (static_cast<double>(s) / samples_per_segment);
            const Vec3 p = curve.eval(seg, x);
            length += (p - prev).norm();
            prev = p;
        }
    }
    return length;
}

double fitCurveLength(const MainPath& path, const SkeletonGraph& skeleton,
                      double smooth_weight, int samples_per_segment) {
    std::vector<Vec3> nodes;
    nodes.reserve(path.nodes.size());
    for (const std::size_t v : path.nodes) nodes.push_back(skeleton.nodes[v]);
    return fitCurveLength(nodes, smooth_weight, samples_per_segment);
}

double panicleLength(double l1_scene, const Calibration& calib) {
    if (calib.x1 <= 0.0) throw UsageError("panicleLength: invalid calibration (x1 <= 0)");
    return l1_scene * calib.label_length_cm / calib.x1;
}

VolumeResult panicleVolume(const PointCloud& panicle, const Calibration& calib, double voxel) {
    if (panicle.empty()) throw UsageError("panicleVolume: empty cloud");
    if (calib.x1 <= 0.0 || calib.normalize_factor <= 0.0)
        throw UsageError("panicleVolume: invalid calibration");
    if (voxel <= 0.0) throw UsageError("panicleVolume: voxel size must be positive");

    // Lattice in the calibration frame, normalized so the label is 1 unit
    // long. The anchor is the frame origin, not the cloud bbox, so adding
    // points can only add voxels.
    constexpr std::int64_t kOffset = 1 << 20;
    std::unordered_set<std::uint64_t> occupied;
    occupied.reserve(panicle.size());
    for (const Vec3& p : panicle.points) {
        const Vec3 d = p - calib.frame_origin;
        std::uint64_t key = 0;
        for (int a = 0; a < 3; ++a) {
            const double q = d.dot(calib.frame_axes[a]) * calib.normalize_factor;
            const auto cell = static_cast<std::int64_t>(std::floor(q / voxel)) + kOffset;
            if (cell < 0 || cell >= (1LL << 21))
                throw PipelineError("panicleVolume: cloud extends beyond the voxel lattice");
            key = (key << 21) | static_cast<std::uint64_t>(cell);
        }
        occupied.insert(key);
    }
    VolumeResult r;
    r.num_voxels = occupied.size();
    const double x = calib.label_length_cm;
    r.volume_cm3 = static_cast<double>(r.num_voxels) * voxel * voxel * voxel * x * x * x;
    return r;
}

}  // namespace panicle

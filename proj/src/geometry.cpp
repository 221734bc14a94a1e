#include "panicle/geometry.hpp"

#include <Eigen/Dense>

#include <string>

#include "panicle/kdtree.hpp"

namespace panicle {

namespace {

Eigen::Matrix3d covarianceOf(const std::vector<Vec3>& pts,
                             const std::vector<std::size_t>& idx, Vec3& mean_out) {
    Vec3 mean{0, 0, 0};
    for (const std::size_t i : idx) mean += pts[i];
    mean = mean / static_cast<double>(idx.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const std::size_t i : idx) {
        const Vec3 d = pts[i] - mean;
        const Eigen::Vector3d v(d.x, d.y, d.z);
        cov += v * v.transpose();
    }
    cov /= static_cast<double>(idx.size());
    mean_out = mean;
    return cov;
}

PcaResult decompose(const Eigen::Matrix3d& cov, const Vec3& mean) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    PcaResult r;
    r.mean = mean;
    // Eigen returns ascending eigenvalues; flip to descending.
    for (int i = 0; i < 3; ++i) {
        const int src = 2 - i;
        r.eigenvalues[i] = std::max(0.0, solver.eigenvalues()[src]);
        const Eigen::Vector3d v = solver.eigenvectors().col(src);
        r.eigenvectors[i] = Vec3{v.x(), v.y(), v.z()};
    }
    return r;
}

}  // namespace

PcaResult pcaEigen(const std::vector<Vec3>& points) {
    if (points.size() < 3) throw UsageError("pcaEigen: at least 3 points required");
    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) all[i] = i;
    Vec3 mean;
    const Eigen::Matrix3d cov = covarianceOf(points, all, mean);
    return decompose(cov, mean);
}

std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k) {
    KdTree tree(cloud.points);
    return tree.knn(query, k);
}

PointCloud estimateNormals(const PointCloud& cloud, std::size_t k) {
    if (k < 3) throw UsageError("estimateNormals: k must be at least 3");
    if (cloud.size() < k) throw UsageError("estimateNormals: cloud smaller than k");
    const KdTree tree(cloud.points);
    PointCloud out = cloud;
    std::vector<Vec3> normals(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nb = tree.knn(cloud.points[i], k);
        Vec3 mean;
        const Eigen::Matrix3d cov = covarianceOf(cloud.points, nb, mean);
        const PcaResult pca = decompose(cov, mean);
        const double total = pca.eigenvalues[0] + pca.eigenvalues[1] + pca.eigenvalues[2];
        if (total <= 0.0)
            throw PipelineError("estimateNormals: zero-variance neighborhood at point " +
                                std::to_string(i));
        // Rank < 2 leaves the normal direction ambiguous (collinear neighborhood).
        if (pca.eigenvalues[1] <= 1e-12 * pca.eigenvalues[0])
            throw PipelineError("estimateNormals: degenerate (collinear) neighborhood at point " +
                                std::to_string(i));
        Vec3 n = pca.eigenvectors[2].normalized();
        if (n.dot(cloud.points[i] - mean) < 0.0) n = -n;
        normals[i] = n;
    }
    out.normals = std::move(normals);
    return out;
}

}  // namespace panicle

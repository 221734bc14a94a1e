#include "panicle/cloud_ops.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include <Eigen/Dense>

#include "panicle/geometry.hpp"
#include "panicle/kdtree.hpp"

namespace panicle {

Clustering dbscan(const PointCloud& cloud, double eps, std::size_t min_pts) {
    if (eps <= 0.0) throw UsageError("dbscan: eps must be positive");
    if (min_pts < 1) throw UsageError("dbscan: min_pts must be at least 1");
    const std::size_t n = cloud.size();
    Clustering result;
    result.labels.assign(n, -1);
    if (n == 0) return result;

    constexpr int kUnvisited = -2;
    std::vector<int>& labels = result.labels;
    labels.assign(n, kUnvisited);
    const KdTree tree(cloud.points);

    int cid = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != kUnvisited) continue;
        const auto neigh = tree.radius(cloud.points[i], eps);
        if (neigh.size() < min_pts) {
            labels[i] = -1;
            continue;
        }
        labels[i] = cid;
        std::deque<std::size_t> seeds(neigh.begin(), neigh.end());
        while (!seeds.empty()) {
            const std::size_t q = seeds.front();
            seeds.pop_front();
            if (labels[q] == -1) labels[q] = cid;  // border point: first core cluster wins
            if (labels[q] != kUnvisited) continue;
            labels[q] = cid;
            const auto nq = tree.radius(cloud.points[q], eps);
            if (nq.size() >= min_pts)
                seeds.insert(seeds.end(), nq.begin(), nq.end());
        }
        ++cid;
    }
    result.cluster_sizes.assign(static_cast<std::size_t>(cid), 0);
    for (const int l : labels)
        if (l >= 0) result.cluster_sizes[static_cast<std::size_t>(l)]++;
    return result;
}

double autoEps(const PointCloud& cloud, std::size_t neighbor_rank) {
    if (neighbor_rank < 1) throw UsageError("autoEps: neighbor rank must be at least 1");
    if (cloud.size() < neighbor_rank + 1)
        throw UsageError("autoEps: cloud smaller than the neighbor rank");
    // k-dist heuristic: the median distance to the min_pts-th neighbor is
    // the radius at which a typical point sees exactly min_pts neighbors;
    // the factor 2 gives core points a solid margin at any density.
    const KdTree tree(cloud.points);
    std::vector<double> kdist(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nb = tree.knn(cloud.points[i], neighbor_rank + 1);  // self included
        kdist[i] = (cloud.points[nb[neighbor_rank]] - cloud.points[i]).norm();
    }
    std::nth_element(kdist.begin(), kdist.begin() + kdist.size() / 2, kdist.end());
    const double median = kdist[kdist.size() / 2];
    if (median <= 0.0) throw PipelineError("autoEps: cloud has duplicate-only spacing");
    return 2.0 * median;
}

FilteredClusters removeSmallClusters(const Clustering& clustering, const PointCloud& cloud,
                                     std::size_t min_size) {
    if (clustering.labels.size() != cloud.size())
        throw UsageError("removeSmallClusters: clustering does not match cloud");
    std::vector<int> remap(clustering.cluster_sizes.size(), -1);
    int next = 0;
    for (std::size_t c = 0; c < clustering.cluster_sizes.size(); ++c)
        if (clustering.cluster_sizes[c] >= min_size) remap[c] = next++;
    if (next == 0)
        throw PipelineError("removeSmallClusters: no cluster meets the size threshold");

    FilteredClusters out;
    out.clustering.cluster_sizes.assign(static_cast<std::size_t>(next), 0);
    out.clusters.resize(static_cast<std::size_t>(next));
    if (cloud.hasNormals()) out.cloud.normals.emplace();
    if (cloud.hasColors()) out.cloud.colors.emplace();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const int l = clustering.labels[i];
        if (l < 0 || remap[static_cast<std::size_t>(l)] < 0) continue;
        const int nl = remap[static_cast<std::size_t>(l)];
        out.cloud.points.push_back(cloud.points[i]);
        if (cloud.hasNormals()) out.cloud.normals->push_back((*cloud.normals)[i]);
        if (cloud.hasColors()) out.cloud.colors->push_back((*cloud.colors)[i]);
        out.clustering.labels.push_back(nl);
        out.clustering.cluster_sizes[static_cast<std::size_t>(nl)]++;
        out.clusters[static_cast<std::size_t>(nl)].points.push_back(cloud.points[i]);
    }
    return out;
}

namespace {

ClusterFeatures featuresOf(const PointCloud& cluster, std::size_t normals_k) {
    ClusterFeatures f;
    f.size = cluster.size();
    if (cluster.size() < 3) return f;  // too small to characterize; fails every gate
    const PcaResult pca = pcaEigen(cluster);
    const double total = pca.eigenvalues[0] + pca.eigenvalues[1] + pca.eigenvalues[2];
    if (total <= 0.0) return f;
    f.planarity = pca.eigenvalues[2] / total;

    const std::size_t k = std::min(normals_k, cluster.size());
    if (k < 3) return f;
    try {
        const PointCloud with_normals = estimateNormals(cluster, k);
        Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();
        for (const Vec3& n : *with_normals.normals) {
            const Eigen::Vector3d v(n.x, n.y, n.z);
            outer += v * v.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(outer);
        const Eigen::Vector3d dom = es.eigenvectors().col(2);
        const Vec3 dominant{dom.x(), dom.y(), dom.z()};
        double sum = 0.0;
        for (const Vec3& n : *with_normals.normals) sum += std::abs(n.dot(dominant));
        f.normal_concentration = sum / static_cast<double>(with_normals.normals->size());
    } catch (const PipelineError&) {
        // Degenerate neighborhoods (near-collinear cluster): leave
        // concentration at 0 so the label gate rejects it.
    }
    return f;
}

}  // namespace

SemanticClouds classifyClusters(const std::vector<PointCloud>& clusters, double max_planarity,
                                double min_normal_concentration, std::size_t normals_k) {
    if (clusters.size() < 2)
        throw UsageError("classifyClusters: at least 2 clusters required");
    SemanticClouds out;
    out.features.reserve(clusters.size());
    for (const PointCloud& c : clusters) out.features.push_back(featuresOf(c, normals_k));

    std::size_t label_idx = clusters.size();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const ClusterFeatures& f = out.features[i];
        if (f.size < 3) continue;
        if (f.planarity < max_planarity && f.normal_concentration > min_normal_concentration) {
            if (label_idx == clusters.size() ||
                f.planarity < out.features[label_idx].planarity)
                label_idx = i;
        }
    }
    if (label_idx == clusters.size())
        throw PipelineError(
            "classifyClusters: no cluster passes the planarity gate (label not found)");

    std::size_t panicle_idx = clusters.size();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        if (i == label_idx) continue;
        if (panicle_idx == clusters.size() || clusters[i].size() > clusters[panicle_idx].size())
            panicle_idx = i;
    }

    out.label = clusters[label_idx];
    out.panicle = clusters[panicle_idx];
    out.label_index = label_idx;
    out.panicle_index = panicle_idx;
    const ClusterFeatures& pf = out.features[panicle_idx];
    out.low_confidence = pf.planarity < max_planarity &&
                         pf.normal_concentration > min_normal_concentration;
    for (std::size_t i = 0; i < clusters.size(); ++i)
        if (i != label_idx && i != panicle_idx) out.residue.push_back(clusters[i]);
    return out;
}

PointCloud voxelDownsample(const PointCloud& cloud, double leaf) {
    if (leaf <= 0.0) throw UsageError("voxelDownsample: leaf size must be positive");
    PointCloud out;
    if (cloud.empty()) return out;
    Vec3 mn = cloud.points[0];
    for (const Vec3& p : cloud.points)
        for (int a = 0; a < 3; ++a) mn[a] = std::min(mn[a], p[a]);

    struct Accum {
        Vec3 sum;
        std::size_t count = 0;
        std::size_t order = 0;
    };
    std::unordered_map<std::uint64_t, Accum> cells;
    std::size_t next_order = 0;
    for (const Vec3& p : cloud.points) {
        const auto ix = static_cast<std::uint64_t>(std::floor((p.x - mn.x) / leaf));
        const auto iy = static_cast<std::uint64_t>(std::floor((p.y - mn.y) / leaf));
        const auto iz = static_cast<std::uint64_t>(std::floor((p.z - mn.z) / leaf));
        if (ix >= (1ULL << 21) || iy >= (1ULL << 21) || iz >= (1ULL << 21))
            throw UsageError("voxelDownsample: leaf size too small for cloud extent");
        const std::uint64_t key = (ix << 42) | (iy << 21) | iz;
        Accum& acc = cells[key];
        if (acc.count == 0) acc.order = next_order++;
        acc.sum += p;
        acc.count++;
    }
    std::vector<const Accum*> ordered(cells.size());
    for (const auto& [key, acc] : cells) ordered[acc.order] = &acc;
    out.points.reserve(ordered.size());
    for (const Accum* acc : ordered)
        out.points.push_back(acc->sum / static_cast<double>(acc->count));
    return out;
}

}  // namespace panicle

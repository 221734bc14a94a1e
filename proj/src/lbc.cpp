#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "panicle/kdtree.hpp"
#include "panicle/traits.hpp"

namespace panicle {

namespace {

struct Graph {
    std::vector<std::vector<std::size_t>> neighbors;
    std::vector<std::array<std::size_t, 2>> edges;  // i < j
};

Graph knnGraph(const std::vector<Vec3>& pts, std::size_t k) {
    const KdTree tree(pts);
    Graph g;
    g.neighbors.resize(pts.size());
    std::vector<std::vector<std::size_t>> raw(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (const std::size_t j : tree.knn(pts[i], k + 1))
            if (j != i) raw[i].push_back(j);
    }
    // Symmetrize.
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (const std::size_t j : raw[i]) {
            g.neighbors[i].push_back(j);
            g.neighbors[j].push_back(i);
        }
    for (auto& nb : g.neighbors) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (const std::size_t j : g.neighbors[i])
            if (i < j) g.edges.push_back({i, j});
    return g;
}

std::size_t componentCount(const Graph& g) {
    const std::size_t n = g.neighbors.size();
    std::vector<char> seen(n, 0);
    std::size_t comps = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        ++comps;
        std::deque<std::size_t> q{s};
        seen[s] = 1;
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop_front();
            for (const std::size_t w : g.neighbors[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    q.push_back(w);
                }
        }
    }
    return comps;
}

double bboxVolume(const std::vector<Vec3>& pts, double& diag_out) {
    Vec3 mn = pts[0], mx = pts[0];
    for (const Vec3& p : pts)
        for (int a = 0; a < 3; ++a) {
            mn[a] = std::min(mn[a], p[a]);
            mx[a] = std::max(mx[a], p[a]);
        }
    const Vec3 ext = mx - mn;
    diag_out = ext.norm();
    return ext.x * ext.y * ext.z;
}

}  // namespace

LbcResult lbcContract(const PointCloud& cloud, const LbcParams& params) {
    const std::size_t n = cloud.size();
    if (params.k_neighbors < 2) throw UsageError("lbcContract: k_neighbors must be >= 2");
    if (n < params.k_neighbors + 1)
        throw UsageError("lbcContract: cloud smaller than k_neighbors + 1");

    const Graph graph = knnGraph(cloud.points, params.k_neighbors);
    const std::size_t comps = componentCount(graph);
    if (comps > 1)
        throw PipelineError("lbcContract: k-NN graph is disconnected (" +
                            std::to_string(comps) + " components)");

    std::vector<Vec3> pos = cloud.points;
    double diag0 = 0.0;
    bboxVolume(pos, diag0);

    const auto oneRingExtent = [&](const std::vector<Vec3>& p, std::size_t i) {
        double sum = 0.0;
        for (const std::size_t j : graph.neighbors[i]) sum += (p[j] - p[i]).norm();
        return sum / static_cast<double>(graph.neighbors[i].size());
    };
    // Transverse spread of a one-ring: sqrt of the second eigenvalue of the
    // neighborhood covariance. Zero once the ring is collinear, so the sum
    // over all rings measures how far the cloud still is from a curve; the
    // overall bounding box barely moves while cross-sections collapse and
    // carries no such signal.
    const auto transverseSpread = [&](const std::vector<Vec3>& p, std::size_t i) {
        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        const auto& nb = graph.neighbors[i];
        for (const std::size_t j : nb) mean += Eigen::Vector3d(p[j].x, p[j].y, p[j].z);
        mean /= static_cast<double>(nb.size());
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const std::size_t j : nb) {
            const Eigen::Vector3d d = Eigen::Vector3d(p[j].x, p[j].y, p[j].z) - mean;
            cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov / static_cast<double>(nb.size()));
        return std::sqrt(std::max(0.0, es.eigenvalues()[1]));
    };
    const auto totalTransverse = [&](const std::vector<Vec3>& p) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += transverseSpread(p, i);
        return total;
    };

    std::vector<double> extent0(n);
    for (std::size_t i = 0; i < n; ++i) extent0[i] = oneRingExtent(pos, i);
    const double transverse0 = totalTransverse(pos);
    const bool already_curve = transverse0 <= 1e-12 * diag0 * static_cast<double>(n);

    LbcResult result;
    double w_l = params.w_l_init;
    double ratio_prev = 1.0;

    for (int iter = 0; iter < params.max_iters; ++iter) {
        // Gaussian edge weights from the current geometry.
        double mean_edge = 0.0;
        for (const auto& [i, j] : graph.edges) mean_edge += (pos[j] - pos[i]).norm();
        mean_edge /= static_cast<double>(graph.edges.size());
        if (mean_edge <= 0.0) break;  // fully collapsed
        const double inv_two_sigma2 = 1.0 / (2.0 * mean_edge * mean_edge);

        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(graph.edges.size() * 2 + n);
        std::vector<double> degree(n, 0.0);
        for (const auto& [i, j] : graph.edges) {
            const double w = std::exp(-(pos[j] - pos[i]).squaredNorm() * inv_two_sigma2);
            trip.emplace_back(static_cast<int>(i), static_cast<int>(j), -w);
            trip.emplace_back(static_cast<int>(j), static_cast<int>(i), -w);
            degree[i] += w;
            degree[j] += w;
        }
        for (std::size_t i = 0; i < n; ++i)
            trip.emplace_back(static_cast<int>(i), static_cast<int>(i), degree[i]);
        Eigen::SparseMatrix<double> lap(static_cast<int>(n), static_cast<int>(n));
        lap.setFromTriplets(trip.begin(), trip.end());

        std::vector<double> wh(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double extent = oneRingExtent(pos, i);
            const double ratio = extent > 0.0 ? extent0[i] / extent : params.w_h_max;
            wh[i] = std::min(params.w_h_init * ratio, params.w_h_max);
        }

        Eigen::SparseMatrix<double> normal = (w_l * w_l) * (lap.transpose() * lap).eval();
        for (std::size_t i = 0; i < n; ++i)
            normal.coeffRef(static_cast<int>(i), static_cast<int>(i)) += wh[i] * wh[i];

        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
        if (solver.info() != Eigen::Success)
            throw PipelineError("lbcContract: contraction solve failed");

        Eigen::MatrixXd rhs(n, 3);
        for (std::size_t i = 0; i < n; ++i) {
            const double w2 = wh[i] * wh[i];
            rhs(static_cast<int>(i), 0) = w2 * pos[i].x;
            rhs(static_cast<int>(i), 1) = w2 * pos[i].y;
            rhs(static_cast<int>(i), 2) = w2 * pos[i].z;
        }
        const Eigen::MatrixXd solved = solver.solve(rhs);

        double step = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 q{solved(static_cast<int>(i), 0), solved(static_cast<int>(i), 1),
                         solved(static_cast<int>(i), 2)};
            step += (q - pos[i]).norm();
            pos[i] = q;
        }
        result.mean_step.push_back(diag0 > 0.0 ? step / (static_cast<double>(n) * diag0) : 0.0);
        result.iterations = iter + 1;
        w_l = std::min(w_l * params.s_l, params.w_l_max);

        if (already_curve) break;  // 1D input: a single relaxation is a fixed point
        const double ratio = totalTransverse(pos) / transverse0;
        if (std::abs(ratio_prev - ratio) < params.converge_ratio) break;
        ratio_prev = ratio;
    }

    result.contracted.points = std::move(pos);
    result.surface_edges = graph.edges;
    return result;
}

}  // namespace panicle

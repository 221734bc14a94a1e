#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "panicle/kdtree.hpp"
#include "panicle/traits.hpp"

namespace panicle {

std::vector<std::vector<std::size_t>> SkeletonGraph::adjacency() const {
    std::vector<std::vector<std::size_t>> adj(nodes.size());
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
    return adj;
}

namespace {

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

void bridgeComponents(SkeletonGraph& skel, DisjointSet& ds) {
    while (skel.edges.size() + 1 < skel.nodes.size()) {
        double bestd = std::numeric_limits<double>::infinity();
        std::array<std::size_t, 2> bridge{0, 0};
        for (std::size_t a = 0; a < skel.nodes.size(); ++a)
            for (std::size_t b = a + 1; b < skel.nodes.size(); ++b) {
                if (ds.find(a) == ds.find(b)) continue;
                const double d = (skel.nodes[a] - skel.nodes[b]).squaredNorm();
                if (d < bestd) {
                    bestd = d;
                    bridge = {a, b};
                }
            }
        ds.unite(bridge[0], bridge[1]);
        skel.edges.push_back(bridge);
    }
}

}  // namespace

SkeletonGraph buildSkeleton(const PointCloud& contracted, double node_spacing_frac,
                            std::size_t adjacency_k,
                            const std::vector<std::array<std::size_t, 2>>* surface_edges,
                            const std::vector<Vec3>* original_points) {
    if (contracted.empty()) throw UsageError("buildSkeleton: empty contracted cloud");
    if (original_points && original_points->size() != contracted.size())
        throw UsageError("buildSkeleton: original point count differs from contracted");
    const std::vector<Vec3>& pts = contracted.points;
    const std::size_t n = pts.size();

    Vec3 mn = pts[0], mx = pts[0], centroid{0, 0, 0};
    for (const Vec3& p : pts) {
        for (int a = 0; a < 3; ++a) {
            mn[a] = std::min(mn[a], p[a]);
            mx[a] = std::max(mx[a], p[a]);
        }
        centroid += p;
    }
    centroid = centroid / static_cast<double>(n);
    const double diag = (mx - mn).norm();
    const double spacing = node_spacing_frac * diag;

    // Farthest-point sampling, seeded at the point farthest from the centroid.
    std::vector<std::size_t> node_points;
    std::size_t seed = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (pts[i] - centroid).squaredNorm();
        if (d > best) {
            best = d;
            seed = i;
        }
    }
    node_points.push_back(seed);
    std::vector<double> min_d2(n);
    for (std::size_t i = 0; i < n; ++i) min_d2[i] = (pts[i] - pts[seed]).squaredNorm();
    for (;;) {
        std::size_t far = 0;
        double far_d2 = -1.0;
        for (std::size_t i = 0; i < n; ++i)
            if (min_d2[i] > far_d2) {
                far_d2 = min_d2[i];
                far = i;
            }
        if (far_d2 < spacing * spacing || far_d2 <= 0.0) break;
        node_points.push_back(far);
        for (std::size_t i = 0; i < n; ++i)
            min_d2[i] = std::min(min_d2[i], (pts[i] - pts[far]).squaredNorm());
    }

    SkeletonGraph skel;
    skel.nodes.reserve(node_points.size());
    for (const std::size_t i : node_points) skel.nodes.push_back(pts[i]);
    skel.node_weights.assign(skel.nodes.size(), 0);

    // Nearest-node assignment.
    std::vector<std::size_t> assign(n);
    std::vector<Vec3> sums(skel.nodes.size(), Vec3{0, 0, 0});
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t bestn = 0;
        double bestd = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < skel.nodes.size(); ++m) {
            const double d = (pts[i] - skel.nodes[m]).squaredNorm();
            if (d < bestd) {
                bestd = d;
                bestn = m;
            }
        }
        assign[i] = bestn;
        skel.node_weights[bestn]++;
        sums[bestn] += pts[i];
    }
    // Recenter nodes on their assigned sets: averaging takes residual
    // cross-section jitter out of the node polyline. The raw extremal
    // samples are restored at the leaves afterwards.
    const std::vector<Vec3> raw_nodes = skel.nodes;
    for (std::size_t m = 0; m < skel.nodes.size(); ++m)
        if (skel.node_weights[m] > 0)
            skel.nodes[m] = sums[m] / static_cast<double>(skel.node_weights[m]);
    if (skel.nodes.size() == 1) return skel;  // single node, no edges

    // Candidate edges between nodes whose assigned points are adjacent on
    // the surface graph (or on a k-NN graph of the contracted positions
    // when no surface graph is available).
    std::vector<std::array<std::size_t, 2>> candidates;
    if (surface_edges) {
        for (const auto& [i, j] : *surface_edges) {
            if (assign[i] == assign[j]) continue;
            const std::size_t a = std::min(assign[i], assign[j]);
            const std::size_t b = std::max(assign[i], assign[j]);
            candidates.push_back({a, b});
        }
    } else {
        const KdTree tree(pts);
        const std::size_t k = std::min(adjacency_k + 1, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (const std::size_t j : tree.knn(pts[i], k)) {
                if (j == i || assign[i] == assign[j]) continue;
                const std::size_t a = std::min(assign[i], assign[j]);
                const std::size_t b = std::max(assign[i], assign[j]);
                candidates.push_back({a, b});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Minimum spanning tree over the candidates (Euclidean edge weight).
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto weight = [&](std::size_t e) {
        return (skel.nodes[candidates[e][0]] - skel.nodes[candidates[e][1]]).norm();
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double wa = weight(a), wb = weight(b);
        return wa < wb || (wa == wb && candidates[a] < candidates[b]);
    });
    DisjointSet ds(skel.nodes.size());
    for (const std::size_t e : order)
        if (ds.unite(candidates[e][0], candidates[e][1])) skel.edges.push_back(candidates[e]);

    // The k-NN adjacency can miss links between sparsely contracted regions;
    // bridge remaining components with their closest node pairs.
    bridgeComponents(skel, ds);

    // Leaves go back to their raw extremal samples: a recentered tip sits
    // half an assignment cell short of the structure's end, shortening
    // every leaf-to-leaf path.
    std::vector<std::size_t> degree(skel.nodes.size(), 0);
    std::vector<std::size_t> any_neighbor(skel.nodes.size(), 0);
    for (const auto& [a, b] : skel.edges) {
        degree[a]++;
        degree[b]++;
        any_neighbor[a] = b;
        any_neighbor[b] = a;
    }
    for (std::size_t m = 0; m < skel.nodes.size(); ++m)
        if (degree[m] == 1) skel.nodes[m] = raw_nodes[m];

    // Endpoint extension: the contraction pulls tips inward by roughly a
    // neighborhood extent. Each assigned point knows how far it moved, so
    // the upper-quartile outward displacement over the leaf's points
    // recovers the lost reach without chasing stray surface extremes.
    if (original_points) {
        for (std::size_t m = 0; m < skel.nodes.size(); ++m) {
            if (degree[m] != 1) continue;
            const Vec3 dir = (skel.nodes[m] - skel.nodes[any_neighbor[m]]).normalized();
            std::vector<double> pull;
            for (std::size_t i = 0; i < n; ++i)
                if (assign[i] == m)
                    pull.push_back(std::max(0.0, ((*original_points)[i] - pts[i]).dot(dir)));
            if (pull.empty()) continue;
            const std::size_t q = (pull.size() - 1) - (pull.size() - 1) * 3 / 20;
            std::nth_element(pull.begin(), pull.begin() + q, pull.end());
            skel.nodes[m] += dir * pull[q];
        }
    }
    return skel;
}

namespace {

// Rejects paths that run through branch tips. Judgement rests on the
// coarse tangent scales: a junction turn stays sharp when the tangents span
// past the contraction-rounded corner, while single-node jitter is sharp
// only at scale 1 and must not disqualify the rachis. A node violates when
// its turning angle exceeds theta_max at every scale > 1 (scale 1 decides
// alone only when no coarser scale is configured). Tangent indices are
// clamped at the path ends.
bool passesAngleGate(const std::vector<Vec3>& nodes, const std::vector<std::size_t>& path,
                     double theta_max_rad, const std::vector<int>& scales) {
    const std::size_t m = path.size();
    bool have_coarse = false;
    for (const int s : scales) have_coarse = have_coarse || s > 1;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        bool sharp_at_every_scale = true;
        for (const int s : scales) {
            if (s < 1 || (have_coarse && s == 1)) continue;
            const std::size_t lo = i >= static_cast<std::size_t>(s) ? i - s : 0;
            const std::size_t hi = std::min(i + static_cast<std::size_t>(s), m - 1);
            const Vec3 in = nodes[path[i]] - nodes[path[lo]];
            const Vec3 out = nodes[path[hi]] - nodes[path[i]];
            const double denom = in.norm() * out.norm();
            if (denom <= 0.0) continue;
            const double angle = std::acos(std::clamp(in.dot(out) / denom, -1.0, 1.0));
            if (angle <= theta_max_rad) {
                sharp_at_every_scale = false;
                break;
            }
        }
        if (sharp_at_every_scale) return false;
    }
    return true;
}

double pathArcLength(const std::vector<Vec3>& nodes, const std::vector<std::size_t>& path) {
    double len = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i)
        len += (nodes[path[i]] - nodes[path[i - 1]]).norm();
    return len;
}

}  // namespace

MainPath mainPath(const SkeletonGraph& skeleton, double theta_max_deg,
                  const std::vector<int>& tangent_scales) {
    if (skeleton.nodes.size() < 2)
        throw UsageError("mainPath: skeleton needs at least 2 nodes");
    const auto adj = skeleton.adjacency();
    std::vector<std::size_t> leaves;
    for (std::size_t v = 0; v < adj.size(); ++v)
        if (adj[v].size() == 1) leaves.push_back(v);
    if (leaves.size() < 2) throw UsageError("mainPath: skeleton has fewer than 2 leaves");

    const double theta_max_rad = theta_max_deg * M_PI / 180.0;
    MainPath best_ok, best_any;
    bool have_ok = false, have_any = false;

    constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);
    for (const std::size_t src : leaves) {
        // BFS over the tree gives the unique simple path to every other leaf.
        std::vector<std::size_t> parent(adj.size(), kNoParent);
        std::deque<std::size_t> q{src};
        parent[src] = src;
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop_front();
            for (const std::size_t w : adj[v])
                if (parent[w] == kNoParent) {
                    parent[w] = v;
                    q.push_back(w);
                }
        }
        for (const std::size_t dst : leaves) {
            if (dst <= src) continue;
            std::vector<std::size_t> path;
            for (std::size_t v = dst; v != src; v = parent[v]) path.push_back(v);
            path.push_back(src);
            std::reverse(path.begin(), path.end());
            const double len = pathArcLength(skeleton.nodes, path);
            if (!have_any || len > best_any.arc_length_scene) {
                best_any.nodes = path;
                best_any.arc_length_scene = len;
                have_any = true;
            }
            if (passesAngleGate(skeleton.nodes, path, theta_max_rad, tangent_scales)) {
                if (!have_ok || len > best_ok.arc_length_scene) {
                    best_ok.nodes = path;
                    best_ok.arc_length_scene = len;
                    have_ok = true;
                }
            }
        }
    }
    if (have_ok) return best_ok;
    best_any.low_confidence = true;
    return best_any;
}

}  // namespace panicle

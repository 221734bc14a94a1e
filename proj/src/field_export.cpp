#include "panicle/field_export.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mc_tables.hpp"
#include "panicle/rng.hpp"

namespace panicle {

namespace {

// A cell edge is identified globally by its lower lattice corner and axis,
// so both cells sharing it interpolate exactly one vertex.
std::uint64_t edgeKey(int x, int y, int z, int axis) {
    return ((static_cast<std::uint64_t>(z) * 2048 + y) * 2048 + x) * 4 + axis;
}

struct EdgeRef {
    int x, y, z, axis;
};

// Bourke edge -> (lattice corner of the cell, axis) in cell-local coords.
EdgeRef localEdge(int e) {
    const int* c0 = mc::kCornerOffset[mc::kEdgeCorners[e][0]];
    const int* c1 = mc::kCornerOffset[mc::kEdgeCorners[e][1]];
    int axis = 0;
    for (int a = 0; a < 3; ++a)
        if (c0[a] != c1[a]) axis = a;
    return {std::min(c0[0], c1[0]), std::min(c0[1], c1[1]), std::min(c0[2], c1[2]), axis};
}

}  // namespace

TriangleMesh marchingCubes(const DensityGrid& grid, double iso) {
    grid.validate();
    if (!std::isfinite(iso)) throw UsageError("marchingCubes: iso must be finite");
    const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
    if (nx > 2047 || ny > 2047 || nz > 2047)
        throw UsageError("marchingCubes: grid dimension exceeds 2047");

    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> vertex_of_edge;

    const auto interpVertex = [&](int x, int y, int z, int axis) -> std::uint32_t {
        const std::uint64_t key = edgeKey(x, y, z, axis);
        const auto it = vertex_of_edge.find(key);
        if (it != vertex_of_edge.end()) return it->second;
        int x1 = x + (axis == 0), y1 = y + (axis == 1), z1 = z + (axis == 2);
        const double v0 = grid.value(x, y, z);
        const double v1 = grid.value(x1, y1, z1);
        // The edge is only requested when it crosses iso, so v0 != v1.
        const double t = (iso - v0) / (v1 - v0);
        const Vec3 p0 = grid.worldPos(x, y, z);
        const Vec3 p1 = grid.worldPos(x1, y1, z1);
        const std::uint32_t idx = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(p0 + (p1 - p0) * t);
        vertex_of_edge.emplace(key, idx);
        return idx;
    };

    for (int z = 0; z + 1 < nz; ++z) {
        for (int y = 0; y + 1 < ny; ++y) {
            for (int x = 0; x + 1 < nx; ++x) {
                int cube = 0;
                for (int c = 0; c < 8; ++c) {
                    const int* off = mc::kCornerOffset[c];
                    if (grid.value(x + off[0], y + off[1], z + off[2]) < iso) cube |= 1 << c;
                }
                if (mc::kEdgeTable[cube] == 0) continue;
                std::uint32_t edge_vertex[12];
                for (int e = 0; e < 12; ++e) {
                    if (!(mc::kEdgeTable[cube] & (1 << e))) continue;
                    const EdgeRef er = localEdge(e);
                    edge_vertex[e] = interpVertex(x + er.x, y + er.y, z + er.z, er.axis);
                }
                for (const int* t = mc::kTriTable[cube]; *t != -1; t += 3) {
                    const std::uint32_t a = edge_vertex[t[0]];
                    const std::uint32_t b = edge_vertex[t[1]];
                    const std::uint32_t c = edge_vertex[t[2]];
                    if (a == b || b == c || a == c) continue;  // collapsed at a corner hit
                    mesh.triangles.push_back({a, b, c});
                }
            }
        }
    }
    return mesh;
}

double otsuThreshold(const DensityGrid& grid) {
    float lo = grid.values[0], hi = grid.values[0];
    for (const float v : grid.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) return lo;
    constexpr int kBins = 256;
    std::array<std::size_t, kBins> hist{};
    const double scale = (kBins - 1) / (static_cast<double>(hi) - lo);
    for (const float v : grid.values) {
        int b = static_cast<int>((v - lo) * scale);
        hist[std::clamp(b, 0, kBins - 1)]++;
    }
    const double total = static_cast<double>(grid.values.size());
    double sum_all = 0;
    for (int b = 0; b < kBins; ++b) sum_all += b * static_cast<double>(hist[b]);
    double w0 = 0, sum0 = 0, best_var = -1.0;
    int best_bin = 0;
    for (int b = 0; b < kBins - 1; ++b) {
        w0 += static_cast<double>(hist[b]);
        if (w0 == 0) continue;
        const double w1 = total - w0;
        if (w1 == 0) break;
        sum0 += b * static_cast<double>(hist[b]);
        const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best_var) {
            best_var = between;
            best_bin = b;
        }
    }
    // Threshold at the upper edge of the chosen bin.
    return lo + (best_bin + 1) / scale;
}

PointCloud sampleMesh(const TriangleMesh& mesh, double points_per_unit_area,
                      std::uint64_t seed) {
    if (points_per_unit_area <= 0.0)
        throw UsageError("sampleMesh: sampling density must be positive");
    PointCloud cloud;
    if (mesh.empty()) return cloud;

    std::vector<double> cum_area(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& tri = mesh.triangles[i];
        const Vec3 ab = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        const Vec3 ac = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        total += 0.5 * ab.cross(ac).norm();
        cum_area[i] = total;
    }
    if (total <= 0.0) return cloud;

    const auto n = static_cast<std::size_t>(std::llround(points_per_unit_area * total));
    cloud.points.reserve(n);
    Rng rng(seed);
    for (std::size_t s = 0; s < n; ++s) {
        const double r = rng.unit() * total;
        const std::size_t i = static_cast<std::size_t>(
            std::lower_bound(cum_area.begin(), cum_area.end(), r) - cum_area.begin());
        const auto& tri = mesh.triangles[std::min(i, mesh.triangles.size() - 1)];
        double u = rng.unit(), v = rng.unit();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        cloud.points.push_back(a + (b - a) * u + (c - a) * v);
    }
    return cloud;
}

PointCloud exportCloud(const DensityGrid& grid, double iso, double points_per_unit_area,
                       std::uint64_t seed) {
    const double level = std::isfinite(iso) ? iso : otsuThreshold(grid);
    return sampleMesh(marchingCubes(grid, level), points_per_unit_area, seed);
}

}  // namespace panicle

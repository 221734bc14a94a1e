#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "oracles.hpp"
#include "panicle/field_export.hpp"
#include "panicle/synth.hpp"

using namespace panicle;

namespace {

DensityGrid sphereGrid(int n, double radius) {
    synth::GridShape shape;
    shape.kind = synth::GridShapeKind::Sphere;
    shape.radius = radius;
    const double spacing = 2.4 * radius / (n - 1);
    return synth::genDensityGrid(shape, {n, n, n}, {spacing, spacing, spacing});
}

struct MeshStats {
    std::size_t boundary_edges = 0;   // edges not shared by exactly 2 triangles
    long long euler = 0;              // V - E + F
};

MeshStats meshTopology(const TriangleMesh& mesh) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_count;
    std::set<std::uint32_t> used;
    for (const auto& tri : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            const std::uint32_t a = tri[e], b = tri[(e + 1) % 3];
            edge_count[{std::min(a, b), std::max(a, b)}]++;
            used.insert(a);
        }
    }
    MeshStats stats;
    for (const auto& [edge, count] : edge_count)
        if (count != 2) ++stats.boundary_edges;
    stats.euler = static_cast<long long>(used.size()) -
                  static_cast<long long>(edge_count.size()) +
                  static_cast<long long>(mesh.triangles.size());
    return stats;
}

double meanRadialError(const TriangleMesh& mesh, double radius) {
    double sum = 0;
    for (const Vec3& v : mesh.vertices) sum += std::abs(v.norm() - radius);
    return sum / static_cast<double>(mesh.vertices.size());
}

}  // namespace

TEST_CASE("marching cubes: constant grid yields an empty mesh") {
    DensityGrid grid;
    grid.dims = {4, 4, 4};
    grid.spacing = {1, 1, 1};
    grid.values.assign(64, 2.0f);
    CHECK(marchingCubes(grid, 5.0).empty());
    CHECK(marchingCubes(grid, -1.0).empty());
}

TEST_CASE("marching cubes: sphere mesh is watertight with unit Euler characteristic") {
    const double radius = 1.0;
    const TriangleMesh mesh = marchingCubes(sphereGrid(64, radius), 0.0);
    REQUIRE(!mesh.empty());
    const MeshStats stats = meshTopology(mesh);
    CHECK(stats.boundary_edges == 0);
    CHECK(stats.euler == 2);
    const double spacing = 2.4 * radius / 63.0;
    CHECK(meanRadialError(mesh, radius) <= spacing);
}

TEST_CASE("marching cubes: error at least halves from 64^3 to 128^3") {
    const double radius = 1.0;
    const double e64 = meanRadialError(marchingCubes(sphereGrid(64, radius), 0.0), radius);
    const double e128 = meanRadialError(marchingCubes(sphereGrid(128, radius), 0.0), radius);
    CHECK(e128 <= 0.625 * e64);  // halves, with 25% slack on the halving
}

TEST_CASE("marching cubes: single interior cell above iso makes a closed shell") {
    DensityGrid grid;
    grid.dims = {5, 5, 5};
    grid.spacing = {1, 1, 1};
    grid.values.assign(125, -1.0f);
    grid.value(2, 2, 2) = 1.0f;
    const TriangleMesh mesh = marchingCubes(grid, 0.0);
    // one lattice point above iso: 8 incident cells each contribute one
    // corner triangle, forming a closed octahedron-like shell
    CHECK(mesh.triangles.size() == 8);
    const MeshStats stats = meshTopology(mesh);
    CHECK(stats.boundary_edges == 0);
    CHECK(stats.euler == 2);
    for (const Vec3& v : mesh.vertices)
        CHECK((v - Vec3{2, 2, 2}).norm() == doctest::Approx(0.5));
}

TEST_CASE("sample mesh: containment, area ratios, determinism") {
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {3, 0, 0}, {3, 1, 0}};
    mesh.triangles.push_back({0, 1, 2});  // area 1
    SUBCASE("single unit triangle: all points inside, on the plane") {
        const PointCloud cloud = sampleMesh(mesh, 1000, 3);
        CHECK(cloud.size() == 1000);
        for (const Vec3& p : cloud.points) {
            CHECK(std::abs(p.z) < 1e-12);
            CHECK(p.x >= 0.0);
            CHECK(p.y >= 0.0);
            CHECK(p.y / 2.0 + p.x <= 1.0 + 1e-12);
        }
    }
    SUBCASE("3:1 area ratio within 3 sigma of the multinomial") {
        mesh.triangles.push_back({1, 3, 4});  // area 1, then scale first tri by using a 3x copy
        TriangleMesh two;
        two.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 2, 0}, {10, 0, 0}, {11, 0, 0}, {10, 1, 0}};
        two.triangles = {{0, 1, 2}, {3, 4, 5}};  // areas 3 and 0.5
        const PointCloud cloud = sampleMesh(two, 2000, 11);
        std::size_t in_big = 0;
        for (const Vec3& p : cloud.points)
            if (p.x < 5.0) ++in_big;
        const double n = static_cast<double>(cloud.size());
        const double p_big = 3.0 / 3.5;
        const double sigma = std::sqrt(n * p_big * (1 - p_big));
        CHECK(std::abs(static_cast<double>(in_big) - n * p_big) <= 3.0 * sigma);
    }
    SUBCASE("same seed, same cloud; empty mesh, empty cloud") {
        const PointCloud a = sampleMesh(mesh, 500, 21);
        const PointCloud b = sampleMesh(mesh, 500, 21);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK((a.points[i] - b.points[i]).norm() == 0.0);
        CHECK(sampleMesh(TriangleMesh{}, 100, 1).empty());
        CHECK_THROWS_AS(sampleMesh(mesh, 0.0, 1), UsageError);
    }
}

TEST_CASE("export cloud: sphere samples stay within a voxel of the radius") {
    const double radius = 1.0;
    const DensityGrid grid = sphereGrid(64, radius);
    const PointCloud cloud = exportCloud(grid, 0.0, 2e4, 5);
    REQUIRE(cloud.size() > 1000);
    const double spacing = grid.spacing.x;
    for (const Vec3& p : cloud.points) CHECK(std::abs(p.norm() - radius) <= spacing);
}

TEST_CASE("export cloud: box field bounding box matches the box within a voxel") {
    synth::GridShape shape;
    shape.kind = synth::GridShapeKind::Box;
    shape.box_half = {0.8, 0.5, 0.3};
    const double spacing = 0.04;
    const DensityGrid grid = synth::genDensityGrid(shape, {64, 64, 64},
                                                   {spacing, spacing, spacing});
    const PointCloud cloud = exportCloud(grid, 0.0, 2e4, 9);
    REQUIRE(!cloud.empty());
    Vec3 mn = cloud.points[0], mx = mn;
    for (const Vec3& p : cloud.points)
        for (int a = 0; a < 3; ++a) {
            mn[a] = std::min(mn[a], p[a]);
            mx[a] = std::max(mx[a], p[a]);
        }
    const Vec3 half = shape.box_half;
    for (int a = 0; a < 3; ++a) {
        CHECK(std::abs(mx[a] - half[a]) <= spacing);
        CHECK(std::abs(mn[a] + half[a]) <= spacing);
    }
}

TEST_CASE("export cloud: empty isosurface gives an empty cloud") {
    DensityGrid grid;
    grid.dims = {8, 8, 8};
    grid.spacing = {1, 1, 1};
    grid.values.assign(512, 0.25f);
    CHECK(exportCloud(grid, 9.0, 1000, 1).empty());
}

TEST_CASE("otsu: separates a bimodal grid between the modes") {
    DensityGrid grid;
    grid.dims = {8, 8, 8};
    grid.spacing = {1, 1, 1};
    Rng rng(83);
    grid.values.resize(512);
    for (std::size_t i = 0; i < grid.values.size(); ++i)
        grid.values[i] = static_cast<float>(i % 2 == 0 ? rng.uniform(0.0, 0.1)
                                                       : rng.uniform(0.9, 1.0));
    const double iso = otsuThreshold(grid);
    CHECK(iso > 0.1);
    CHECK(iso < 0.9);
}

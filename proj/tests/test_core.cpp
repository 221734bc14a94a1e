#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "panicle/geometry.hpp"
#include "panicle/io.hpp"
#include "panicle/kdtree.hpp"

using namespace panicle;
namespace fs = std::filesystem;

namespace {

fs::path tempDir() {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() /
                         ("panicle_core_" + std::to_string(::getpid()) + "_" +
                          std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("ply: 3-point ascii round trip") {
    const fs::path dir = tempDir();
    const fs::path path = dir / "tri.ply";
    {
        std::ofstream out(path);
        out << "ply\nformat ascii 1.0\nelement vertex 3\n"
               "property float x\nproperty float y\nproperty float z\nend_header\n"
               "0 0 0\n1 0 0\n0 1 0\n";
    }
    const PointCloud cloud = readPly(path.string());
    REQUIRE(cloud.size() == 3);
    CHECK(cloud.points[1].x == doctest::Approx(1.0));
    CHECK(cloud.points[2].y == doctest::Approx(1.0));

    writePly(cloud, (dir / "tri2.ply").string(), PlyFormat::Ascii);
    const PointCloud again = readPly((dir / "tri2.ply").string());
    for (std::size_t i = 0; i < 3; ++i)
        CHECK((again.points[i] - cloud.points[i]).norm() < 1e-6);
}

TEST_CASE("ply: zero-count element gives empty cloud") {
    const fs::path path = tempDir() / "empty.ply";
    {
        std::ofstream out(path);
        out << "ply\nformat ascii 1.0\nelement vertex 0\n"
               "property float x\nproperty float y\nproperty float z\nend_header\n";
    }
    CHECK(readPly(path.string()).empty());
}

TEST_CASE("ply: binary round trip is bitwise exact") {
    Rng rng(42);
    PointCloud cloud;
    std::vector<Rgb8> colors;
    std::vector<Vec3> normals;
    for (int i = 0; i < 100000; ++i) {
        cloud.points.push_back({rng.uniform(-100, 100), rng.uniform(-100, 100),
                                rng.uniform(-100, 100)});
        normals.push_back(Vec3{rng.normal(), rng.normal(), rng.normal()}.normalized());
        colors.push_back({static_cast<std::uint8_t>(rng.below(256)),
                          static_cast<std::uint8_t>(rng.below(256)),
                          static_cast<std::uint8_t>(rng.below(256))});
    }
    cloud.normals = normals;
    cloud.colors = colors;

    const fs::path path = tempDir() / "big.ply";
    writePly(cloud, path.string(), PlyFormat::BinaryLittleEndian);
    const PointCloud back = readPly(path.string());
    REQUIRE(back.size() == cloud.size());
    REQUIRE(back.hasNormals());
    REQUIRE(back.hasColors());
    bool exact = true;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        exact = exact && back.points[i].x == cloud.points[i].x &&
                back.points[i].y == cloud.points[i].y && back.points[i].z == cloud.points[i].z;
        exact = exact && (*back.normals)[i].x == (*cloud.normals)[i].x;
        exact = exact && (*back.colors)[i].r == (*cloud.colors)[i].r;
    }
    CHECK(exact);
}

TEST_CASE("ply: malformed input reports a byte offset") {
    const fs::path dir = tempDir();
    SUBCASE("bad magic") {
        std::ofstream(dir / "bad.ply") << "plx\nformat ascii 1.0\nend_header\n";
        CHECK_THROWS_WITH_AS(readPly((dir / "bad.ply").string()),
                             doctest::Contains("byte"), DataError);
    }
    SUBCASE("truncated binary body") {
        std::ofstream out(dir / "trunc.ply", std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\nelement vertex 5\n"
               "property double x\nproperty double y\nproperty double z\nend_header\n";
        const double v = 1.0;
        out.write(reinterpret_cast<const char*>(&v), 8);  // far too short
        out.close();
        CHECK_THROWS_AS(readPly((dir / "trunc.ply").string()), DataError);
    }
    SUBCASE("unsupported property type") {
        std::ofstream(dir / "weird.ply")
            << "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property quad x\nproperty float y\nproperty float z\nend_header\n0 0 0\n";
        CHECK_THROWS_AS(readPly((dir / "weird.ply").string()), DataError);
    }
}

TEST_CASE("knn: trivial queries") {
    PointCloud cloud;
    cloud.points = {{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {3, 3, 3}};
    CHECK(knn(cloud, {1, 0, 0}, 1) == std::vector<std::size_t>{1});
    const auto all = knn(cloud, {0.2, 0.2, 0.2}, 4);
    CHECK(all.size() == 4);

    PointCloud empty;
    CHECK_THROWS_AS(knn(empty, {0, 0, 0}, 1), UsageError);
    CHECK_THROWS_AS(knn(cloud, {0, 0, 0}, 5), UsageError);
}

TEST_CASE("knn: matches linear-scan oracle on 1000 random queries") {
    Rng rng(7);
    const PointCloud cloud = oracles::randomCloud(rng, 100);
    const KdTree tree(cloud.points);
    for (int q = 0; q < 1000; ++q) {
        const Vec3 query{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2),
                         rng.uniform(-1.2, 1.2)};
        const auto got = tree.knn(query, 5);
        const auto want = oracles::knnLinearScan(cloud.points, query, 5);
        REQUIRE(got == want);
    }
}

TEST_CASE("knn: radius query matches brute force") {
    Rng rng(11);
    const PointCloud cloud = oracles::randomCloud(rng, 200);
    const KdTree tree(cloud.points);
    for (int q = 0; q < 200; ++q) {
        const Vec3 query{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double r = rng.uniform(0.05, 0.8);
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < cloud.size(); ++i)
            if ((cloud.points[i] - query).norm() <= r) want.push_back(i);
        REQUIRE(tree.radius(query, r) == want);
    }
}

TEST_CASE("pca: rank-1 and planar degenerate spectra") {
    PointCloud segment;
    for (int i = 0; i < 10; ++i) segment.points.push_back({i * 0.1, 0, 0});
    const PcaResult line = pcaEigen(segment);
    CHECK(line.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(line.eigenvalues[2] == doctest::Approx(0.0).epsilon(1e-9));

    Rng rng(3);
    PointCloud disc;
    for (int i = 0; i < 500; ++i) {
        const double r = std::sqrt(rng.unit()), th = rng.uniform(0, 2 * M_PI);
        disc.points.push_back({r * std::cos(th), r * std::sin(th), 0});
    }
    const PcaResult planar = pcaEigen(disc);
    CHECK(planar.eigenvalues[2] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(planar.eigenvalues[0] / planar.eigenvalues[1] == doctest::Approx(1.0).epsilon(0.2));

    PointCloud two;
    two.points = {{0, 0, 0}, {1, 1, 1}};
    CHECK_THROWS_AS(pcaEigen(two), UsageError);
}

TEST_CASE("pca: unit gaussian eigenvalue ratios near 1 for n=1e4") {
    Rng rng(5);
    PointCloud cloud;
    for (int i = 0; i < 10000; ++i)
        cloud.points.push_back({rng.normal(), rng.normal(), rng.normal()});
    const PcaResult pca = pcaEigen(cloud);
    for (int a = 0; a < 3; ++a)
        CHECK(pca.eigenvalues[a] == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("pca: eigenvalues are rotation invariant") {
    Rng rng(13);
    const PointCloud cloud = oracles::randomCloud(rng, 300);
    const PcaResult base = pcaEigen(cloud);
    for (int trial = 0; trial < 5; ++trial) {
        const auto rot = oracles::randomRotation(rng);
        PointCloud rotated;
        for (const Vec3& p : cloud.points) rotated.points.push_back(oracles::rotate(rot, p));
        const PcaResult r = pcaEigen(rotated);
        for (int a = 0; a < 3; ++a)
            CHECK(r.eigenvalues[a] == doctest::Approx(base.eigenvalues[a]).epsilon(1e-9));
    }
}

TEST_CASE("normals: noiseless plane gives the plane normal") {
    Rng rng(17);
    PointCloud plane;
    for (int i = 0; i < 400; ++i)
        plane.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0});
    const PointCloud with_normals = estimateNormals(plane, 16);
    REQUIRE(with_normals.hasNormals());
    for (const Vec3& n : *with_normals.normals) {
        CHECK(std::abs(n.z) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(std::abs(n.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("normals: sphere normals point radially for >= 99% of points") {
    Rng rng(19);
    PointCloud sphere;
    for (int i = 0; i < 2000; ++i) {
        const Vec3 u = Vec3{rng.normal(), rng.normal(), rng.normal()}.normalized();
        sphere.points.push_back(u * 2.0);
    }
    const PointCloud with_normals = estimateNormals(sphere, 10);
    std::size_t good = 0;
    for (std::size_t i = 0; i < sphere.size(); ++i) {
        const Vec3 radial = sphere.points[i].normalized();
        if ((*with_normals.normals)[i].dot(radial) > 0.95) ++good;
    }
    CHECK(static_cast<double>(good) / static_cast<double>(sphere.size()) >= 0.99);
}

TEST_CASE("normals: collinear neighborhood is degenerate") {
    PointCloud line;
    for (int i = 0; i < 3; ++i) line.points.push_back({static_cast<double>(i), 0, 0});
    CHECK_THROWS_AS(estimateNormals(line, 3), PipelineError);
}

TEST_CASE("grid json + raw round trip") {
    DensityGrid grid;
    grid.dims = {3, 4, 5};
    grid.origin = {-1, 0.5, 2};
    grid.spacing = {0.1, 0.2, 0.3};
    Rng rng(23);
    grid.values.resize(60);
    for (auto& v : grid.values) v = static_cast<float>(rng.uniform(-2, 2));

    const fs::path path = tempDir() / "grid.json";
    writeGrid(grid, path.string());
    const DensityGrid back = readGrid(path.string());
    CHECK(back.dims == grid.dims);
    CHECK((back.origin - grid.origin).norm() == 0.0);
    bool same = back.values.size() == grid.values.size();
    for (std::size_t i = 0; same && i < grid.values.size(); ++i)
        same = back.values[i] == grid.values[i];
    CHECK(same);
}

TEST_CASE("mask png/pgm round trip") {
    Rng rng(29);
    const BinaryMask mask = oracles::randomBlobMask(rng, 37, 23);
    const fs::path dir = tempDir();
    for (const char* name : {"m.png", "m.pgm"}) {
        writeMask(mask, (dir / name).string());
        const BinaryMask back = readMask((dir / name).string());
        REQUIRE(back.width == mask.width);
        REQUIRE(back.height == mask.height);
        CHECK(back.bits == mask.bits);
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "panicle/cloud_ops.hpp"
#include "panicle/field_export.hpp"
#include "panicle/kdtree.hpp"
#include "panicle/synth.hpp"

using namespace panicle;

TEST_CASE("label: noiseless identity-pose plate matches its dimensions") {
    synth::LabelSpec spec;
    const PointCloud label = synth::genLabel(spec, {}, 11);
    REQUIRE(label.size() > 1000);
    const OrientedBoundingBox box = computeObb(label);
    // sampling resolution ~ 1/sqrt(density)
    const double tol = 2.0 / std::sqrt(spec.density_per_cm2);
    CHECK(box.half_extents[0] == doctest::Approx(spec.length_cm / 2).epsilon(tol));
    CHECK(box.half_extents[1] == doctest::Approx(spec.width_cm / 2).epsilon(tol));
    CHECK(box.half_extents[2] <= spec.thickness_cm / 2 + tol);
}

TEST_CASE("label: random pose calibration recovers the physical length within 0.5%") {
    for (int trial = 0; trial < 6; ++trial) {
        synth::LabelSpec spec;
        spec.noise_sigma_cm = 0.002 * spec.length_cm;  // 0.2% noise
        const synth::Placement pose = synth::randomPlacement(900 + trial, 0.25, 5.0);
        const PointCloud label = synth::genLabel(spec, pose, 300 + trial);
        const Calibration calib = calibrate(label, 7.5);
        CHECK(calib.x1 == doctest::Approx(7.5 * pose.scale).epsilon(0.005));
    }
}

TEST_CASE("label: same seed reproduces the identical cloud") {
    synth::LabelSpec spec;
    spec.noise_sigma_cm = 0.01;
    const PointCloud a = synth::genLabel(spec, {}, 77);
    const PointCloud b = synth::genLabel(spec, {}, 77);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK((a.points[i] - b.points[i]).norm() == 0.0);
}

TEST_CASE("panicle: straight rachis without branches has exact ground-truth length") {
    synth::PanicleSpec spec;
    spec.rachis_control_cm = {{0, 0, 0}, {0, 0, 10}, {0, 0, 20}};
    spec.branch_count = 0;
    spec.noise_sigma_cm = 0.0;
    const auto [cloud, truth] = synth::genPanicle(spec, 0.0);
    CHECK(truth.rachis_arc_length_cm == doctest::Approx(20.0).epsilon(1e-9));
    REQUIRE(!cloud.empty());
    // all points on the tube surface
    for (const Vec3& p : cloud.points)
        CHECK(std::hypot(p.x, p.y) == doctest::Approx(spec.rachis_radius_cm).epsilon(1e-6));
}

TEST_CASE("panicle: quarter-circle rachis length matches pi*r/2 within 0.1%") {
    synth::PanicleSpec spec;
    const double r = 12.0;
    spec.rachis_control_cm.clear();
    for (int i = 0; i <= 8; ++i) {
        const double t = (M_PI / 2) * i / 8.0;
        spec.rachis_control_cm.push_back({r * std::sin(t), 0, r - r * std::cos(t)});
    }
    spec.branch_count = 0;
    const auto [cloud, truth] = synth::genPanicle(spec, 0.0);
    CHECK(truth.rachis_arc_length_cm == doctest::Approx(M_PI * r / 2).epsilon(0.001));
}

TEST_CASE("panicle: generator is deterministic given the seed") {
    const synth::PanicleSpec spec = synth::defaultPanicleSpec(5);
    const auto [a, ta] = synth::genPanicle(spec, 0.0);
    const auto [b, tb] = synth::genPanicle(spec, 0.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK((a.points[i] - b.points[i]).norm() == 0.0);
    CHECK(ta.rachis_arc_length_cm == tb.rachis_arc_length_cm);
}

TEST_CASE("panicle: volume oracle is self-consistent at half pitch") {
    synth::PanicleSpec spec = synth::defaultPanicleSpec(9);
    spec.branch_count = 4;  // keep the oracle quick
    const auto [cloud_a, coarse] = synth::genPanicle(spec, 0.04);
    const auto [cloud_b, fine] = synth::genPanicle(spec, 0.02);
    CHECK(coarse.occupied_volume_cm3 ==
          doctest::Approx(fine.occupied_volume_cm3).epsilon(0.05));
}

TEST_CASE("density grid: sphere value at the center equals the radius") {
    synth::GridShape shape;
    shape.kind = synth::GridShapeKind::Sphere;
    shape.radius = 1.5;
    const DensityGrid grid = synth::genDensityGrid(shape, {33, 33, 33}, {0.125, 0.125, 0.125});
    // odd dims put a lattice point exactly at the center
    CHECK(grid.value(16, 16, 16) == doctest::Approx(1.5).epsilon(1e-6));
    CHECK_THROWS_AS(synth::genDensityGrid(shape, {1, 33, 33}, {0.1, 0.1, 0.1}), UsageError);
}

TEST_CASE("density grid: panicle export stays within 2 voxels of the surface samples") {
    synth::PanicleSpec spec = synth::defaultPanicleSpec(13);
    spec.branch_count = 3;
    spec.surface_density_per_cm2 = 40.0;
    synth::GridShape shape;
    shape.kind = synth::GridShapeKind::Panicle;
    shape.panicle_spec = spec;
    const double spacing = 0.45;
    const DensityGrid grid = synth::genDensityGrid(shape, {80, 80, 80},
                                                   {spacing, spacing, spacing});
    const PointCloud exported = exportCloud(grid, 0.0, 30.0, 3);
    REQUIRE(!exported.empty());

    auto [surface, truth] = synth::genPanicle(spec, 0.0);
    // the generator cloud is centered like the grid (grid centers the shape
    // on its own bbox midpoint)
    Vec3 mn = surface.points[0], mx = mn;
    for (const Vec3& p : surface.points)
        for (int a = 0; a < 3; ++a) {
            mn[a] = std::min(mn[a], p[a]);
            mx[a] = std::max(mx[a], p[a]);
        }
    const KdTree surface_tree(surface.points);
    double worst_export = 0.0;
    for (const Vec3& p : exported.points) {
        const auto nn = surface_tree.knn(p, 1);
        worst_export = std::max(worst_export,
                                (surface.points[nn[0]] - p).norm());
    }
    CHECK(worst_export <= 2.0 * spacing);
}

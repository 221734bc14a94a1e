#ifndef PANICLE_SYNTH_HPP
#define PANICLE_SYNTH_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "panicle/types.hpp"

namespace panicle::synth {

// Uniform scale + rotation + translation, applied as world = R * (s * local) + t.
struct Placement {
    std::array<Vec3, 3> rotation{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};  // columns
    Vec3 translation;
    double scale = 1.0;

    Vec3 apply(const Vec3& local) const {
        const Vec3 s = local * scale;
        return {rotation[0].x * s.x + rotation[1].x * s.y + rotation[2].x * s.z + translation.x,
                rotation[0].y * s.x + rotation[1].y * s.y + rotation[2].y * s.z + translation.y,
                rotation[0].z * s.x + rotation[1].z * s.y + rotation[2].z * s.z + translation.z};
    }
};

Placement randomPlacement(std::uint64_t seed, double scale, double translation_span = 0.0);

struct LabelSpec {
    double length_cm = 7.5;
    double width_cm = 3.0;
    double thickness_cm = 0.02;      // thin card, like the field fiducial
    double density_per_cm2 = 320.0;  // surface points per cm^2
    double noise_sigma_cm = 0.0;
};

// Plate surface sampling in cm, transformed by the placement.
PointCloud genLabel(const LabelSpec& spec, const Placement& pose, std::uint64_t seed);

struct PanicleSpec {
    std::vector<Vec3> rachis_control_cm;  // >= 2 control points
    double rachis_radius_cm = 0.25;
    std::size_t branch_count = 10;
    double branch_length_min_cm = 2.0;
    double branch_length_max_cm = 4.5;
    double branch_angle_min_deg = 25.0;
    double branch_angle_max_deg = 50.0;
    double branch_radius_cm = 0.1;
    Vec3 grain_semi_axes_cm{0.4, 0.17, 0.13};
    double grain_spacing_cm = 0.7;       // along each branch
    double surface_density_per_cm2 = 55.0;
    double noise_sigma_cm = 0.02;
    std::uint64_t seed = 7;
};

struct GroundTruth {
    double rachis_arc_length_cm = 0.0;
    double occupied_volume_cm3 = 0.0;  // fine-voxel oracle over the solid union
    double label_length_cm = 7.5;
};

// Procedural panicle in cm (local frame): rachis spline tube, straight
// branches with grain ellipsoids. Ground truth comes from the generating
// curve (dense polyline) and a fine occupancy oracle, independent of the
// measurement pipeline. Self-intersections are not checked.
std::pair<PointCloud, GroundTruth> genPanicle(const PanicleSpec& spec,
                                              double volume_oracle_pitch_cm = 0.02);

// Panicle + label scene in scene units (shared placement), label offset
// from the panicle so clustering can separate them.
struct SynthScene {
    PointCloud scene;    // merged panicle + label
    PointCloud panicle;  // ground-truth split, same transform
    PointCloud label;
    GroundTruth truth;
};

SynthScene genScene(const PanicleSpec& panicle_spec, const LabelSpec& label_spec,
                    const Placement& pose, std::uint64_t seed,
                    bool with_volume_truth = true);

// A seeded default panicle: gently curved rachis, randomized branches.
PanicleSpec defaultPanicleSpec(std::uint64_t seed);

enum class GridShapeKind { Sphere, Box, Panicle };

struct GridShape {
    GridShapeKind kind = GridShapeKind::Sphere;
    double radius = 1.0;        // sphere
    Vec3 box_half{1, 1, 1};     // box
    PanicleSpec panicle_spec;   // panicle (point-sampled distance field)
};

// Density grid centered on the shape: exact signed-distance style field for
// sphere/box (positive inside), sample-distance shell for the panicle.
DensityGrid genDensityGrid(const GridShape& shape, std::array<int, 3> dims, Vec3 spacing);

}  // namespace panicle::synth

#endif

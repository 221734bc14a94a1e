#ifndef PANICLE_FIELD_EXPORT_HPP
#define PANICLE_FIELD_EXPORT_HPP

#include <cstdint>

#include "panicle/types.hpp"

namespace panicle {

// Standard 256-case marching cubes with linear edge interpolation; vertices
// in world coordinates. Vertices on shared cell edges are welded, so closed
// level sets come out watertight. A grid entirely on one side of iso yields
// an empty mesh.
TriangleMesh marchingCubes(const DensityGrid& grid, double iso);

// Otsu threshold over a 256-bin histogram of the grid values; the default
// iso level when none is given.
double otsuThreshold(const DensityGrid& grid);

// Uniform surface sampling: per-triangle counts multinomial in triangle
// area, uniform barycentric placement, deterministic given seed.
PointCloud sampleMesh(const TriangleMesh& mesh, double points_per_unit_area,
                      std::uint64_t seed);

// marchingCubes + sampleMesh. Pass a non-finite iso to use otsuThreshold.
PointCloud exportCloud(const DensityGrid& grid, double iso, double points_per_unit_area,
                       std::uint64_t seed);

}  // namespace panicle

#endif

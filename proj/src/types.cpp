#include "panicle/types.hpp"

namespace panicle {

void PointCloud::validate() const {
    for (const Vec3& p : points)
        if (!p.isFinite()) throw UsageError("point cloud contains non-finite coordinates");
    if (normals) {
        if (normals->size() != points.size())
            throw UsageError("normals array length differs from point count");
        for (const Vec3& n : *normals) {
            if (!n.isFinite()) throw UsageError("point cloud contains non-finite normals");
            if (std::abs(n.norm() - 1.0) > 1e-6)
                throw UsageError("normals must be unit length");
        }
    }
    if (colors && colors->size() != points.size())
        throw UsageError("colors array length differs from point count");
}

std::size_t BinaryMask::area() const {
    std::size_t n = 0;
    for (const std::uint8_t b : bits) n += (b != 0);
    return n;
}

void DensityGrid::validate() const {
    for (int d : dims)
        if (d < 2) throw UsageError("density grid dims must be at least 2 per axis");
    if (spacing.x <= 0 || spacing.y <= 0 || spacing.z <= 0)
        throw UsageError("density grid spacing must be positive");
    const std::size_t expect = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    if (values.size() != expect)
        throw UsageError("density grid value count does not match dims");
    for (const float v : values)
        if (!std::isfinite(v)) throw UsageError("density grid contains non-finite values");
}

}  // namespace panicle

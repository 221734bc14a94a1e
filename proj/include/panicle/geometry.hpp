#ifndef PANICLE_GEOMETRY_HPP
#define PANICLE_GEOMETRY_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "panicle/types.hpp"

namespace panicle {

struct PcaResult {
    std::array<double, 3> eigenvalues{0, 0, 0};  // descending
    std::array<Vec3, 3> eigenvectors;            // orthonormal, paired with eigenvalues
    Vec3 mean;
};

// Eigendecomposition of the 3x3 covariance of the points (population
// covariance). Throws UsageError for fewer than 3 points.
PcaResult pcaEigen(const std::vector<Vec3>& points);

inline PcaResult pcaEigen(const PointCloud& cloud) { return pcaEigen(cloud.points); }

// Indices of the k nearest cloud points to the query, exact, ties broken by
// lower index. Builds a throwaway tree; use KdTree directly in hot loops.
std::vector<std::size_t> knn(const PointCloud& cloud, const Vec3& query, std::size_t k);

// Per-point normals from the k-neighborhood covariance: the eigenvector of
// the smallest eigenvalue, oriented away from the neighborhood centroid.
// Throws PipelineError if any neighborhood is rank-deficient (collinear or
// coincident points leave the normal direction ambiguous).
PointCloud estimateNormals(const PointCloud& cloud, std::size_t k = 16);

}  // namespace panicle

#endif

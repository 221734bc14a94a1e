#ifndef PANICLE_CLOUD_OPS_HPP
#define PANICLE_CLOUD_OPS_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "panicle/types.hpp"

namespace panicle {

struct Clustering {
    std::vector<int> labels;                  // per point; -1 = noise
    std::vector<std::size_t> cluster_sizes;   // indexed by cluster id

    std::size_t clusterCount() const { return cluster_sizes.size(); }
};

// Exact DBSCAN: a point is core iff at least min_pts points (itself
// included) lie within eps; clusters are maximal density-connected sets;
// border points join the first discovered adjacent core cluster. Output is
// deterministic given input order.
Clustering dbscan(const PointCloud& cloud, double eps, std::size_t min_pts);

// eps default used by the CLI: twice the median distance to the
// neighbor_rank-th nearest neighbor (neighbor_rank = the DBSCAN min_pts).
double autoEps(const PointCloud& cloud, std::size_t neighbor_rank = 10);

struct FilteredClusters {
    PointCloud cloud;
    Clustering clustering;
    std::vector<PointCloud> clusters;  // per kept cluster, id order
};

// Drops noise points and clusters smaller than min_size, re-compacting ids.
// Throws PipelineError when nothing survives (unusable scene).
FilteredClusters removeSmallClusters(const Clustering& clustering, const PointCloud& cloud,
                                     std::size_t min_size);

struct ClusterFeatures {
    std::size_t size = 0;
    double planarity = 0.0;             // lambda3 / (lambda1+lambda2+lambda3)
    double normal_concentration = 0.0;  // mean |n . dominant normal|
};

struct SemanticClouds {
    PointCloud panicle;
    PointCloud label;
    std::vector<PointCloud> residue;
    std::size_t label_index = 0;
    std::size_t panicle_index = 0;
    std::vector<ClusterFeatures> features;  // per input cluster
    bool low_confidence = false;  // the chosen panicle also looks planar
};

// Separates the fiducial label (most planar cluster with concentrated
// normals) from the panicle (largest remaining cluster). Throws
// PipelineError when no cluster passes the planarity gate.
SemanticClouds classifyClusters(const std::vector<PointCloud>& clusters,
                                double max_planarity = 0.02,
                                double min_normal_concentration = 0.9,
                                std::size_t normals_k = 16);

// PCA-aligned bounding box; half_extents sorted descending. Axis signs are
// canonical (third-moment positive, right-handed) so the frame is stable
// under rigid motions of the cloud. Throws on collinear input.
OrientedBoundingBox computeObb(const PointCloud& cloud);

struct Rect2D {
    double long_side = 0.0;
    double short_side = 0.0;
    std::array<double, 2> long_axis{1.0, 0.0};  // unit direction of the long side
};

// Minimum-area enclosing rectangle of 2D points (convex hull + rotating
// calipers).
Rect2D minAreaRect(const std::vector<std::array<double, 2>>& pts);

struct Calibration {
    double x1 = 0.0;                // label length in scene units
    double label_length_cm = 7.5;   // physical label length
    double scale_cm_per_unit = 0.0; // label_length_cm / x1
    double normalize_factor = 0.0;  // 1 / x1
    // Label OBB frame; downstream voxelization happens in these coordinates
    // so volumes are invariant under rigid motions of the whole scene.
    Vec3 frame_origin;
    std::array<Vec3, 3> frame_axes;
};

// Size calibration from the label cloud: project onto the median-area OBB
// face, fit the minimum-area rectangle, take its longer side as the label
// length in scene units.
Calibration calibrate(const PointCloud& label_cloud, double real_length_cm = 7.5);

Calibration readCalibration(const std::string& path);
void writeCalibration(const Calibration& calib, const std::string& path);

// One centroid per occupied leaf-sized voxel, first-encounter order.
PointCloud voxelDownsample(const PointCloud& cloud, double leaf);

}  // namespace panicle

#endif

#ifndef PANICLE_TRAITS_HPP
#define PANICLE_TRAITS_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "panicle/cloud_ops.hpp"
#include "panicle/types.hpp"

namespace panicle {

struct LbcParams {
    std::size_t k_neighbors = 16;
    double w_l_init = 1.0;
    double w_h_init = 1.0;
    double s_l = 3.0;          // contraction weight growth per iteration
    int max_iters = 20;
    double converge_ratio = 0.01;
    double w_l_max = 2048.0;   // weight caps keep late solves well conditioned
    double w_h_max = 1e4;
};

struct LbcResult {
    PointCloud contracted;
    int iterations = 0;
    std::vector<double> mean_step;  // mean displacement per iteration, relative to bbox diagonal
    // Symmetrized k-NN edges of the input cloud (point order is preserved by
    // the contraction). Skeleton building connects nodes through this
    // surface adjacency; contracted positions alone would bridge unrelated
    // filaments that merely end up close.
    std::vector<std::array<std::size_t, 2>> surface_edges;
};

// Laplacian-based contraction toward the curve skeleton: repeatedly solve
// the stacked system [w_l * L; W_H] P' = [0; W_H P] on the k-NN graph with
// Gaussian edge weights, growing w_l and refreshing W_H from the shrinking
// one-ring extents, until the bounding-volume ratio settles. Throws
// PipelineError naming the component count when the k-NN graph is
// disconnected.
LbcResult lbcContract(const PointCloud& cloud, const LbcParams& params = {});

struct SkeletonGraph {
    std::vector<Vec3> nodes;
    std::vector<std::array<std::size_t, 2>> edges;
    std::vector<std::size_t> node_weights;  // contracted points attributed to the node

    std::vector<std::vector<std::size_t>> adjacency() const;
};

// Graph from a contracted cloud: farthest-point-sampled nodes at spacing
// node_spacing_frac * bounding diagonal, nearest-node point assignment
// (nodes recentered on their assigned sets), k-NN adjacency between
// assigned sets, then the Euclidean minimum spanning tree. When
// surface_edges is given (from LbcResult) the adjacency comes from the
// original surface graph instead of the contracted positions.
// original_points (parallel to the contracted cloud) additionally enables
// endpoint extension: each leaf node is pushed along its local direction to
// cover the original points assigned to it, undoing the contraction's
// characteristic tip shrink.
SkeletonGraph buildSkeleton(const PointCloud& contracted, double node_spacing_frac = 0.03,
                            std::size_t adjacency_k = 8,
                            const std::vector<std::array<std::size_t, 2>>* surface_edges = nullptr,
                            const std::vector<Vec3>* original_points = nullptr);

struct MainPath {
    std::vector<std::size_t> nodes;   // simple path, node indices in order
    double arc_length_scene = 0.0;    // polyline length over the skeleton nodes
    bool low_confidence = false;      // no path satisfied the angle constraint
};

// Longest leaf-to-leaf path whose every internal turning angle stays within
// theta_max at every tangent scale (direction between nodes m steps apart).
// Branch tips force sharp multi-scale turns, so paths through them are
// rejected; if nothing survives, the longest path is returned flagged.
MainPath mainPath(const SkeletonGraph& skeleton, double theta_max_deg = 60.0,
                  const std::vector<int>& tangent_scales = {1, 3});

// Arc length of a chord-length-parameterized cubic smoothing spline through
// the nodes, measured on a dense polyline (samples_per_segment per span).
// smooth_weight scales cubically with the data so results are invariant
// under uniform scaling.
double fitCurveLength(const std::vector<Vec3>& path_nodes, double smooth_weight = 1e-3,
                      int samples_per_segment = 100);

double fitCurveLength(const MainPath& path, const SkeletonGraph& skeleton,
                      double smooth_weight = 1e-3, int samples_per_segment = 100);

// L = L1 * X / x1 with X the physical label length.
double panicleLength(double l1_scene, const Calibration& calib);

struct VolumeResult {
    std::size_t num_voxels = 0;
    double volume_cm3 = 0.0;
};

// Voxel-occupancy volume: the cloud is expressed in the calibration frame,
// normalized so the label length is 1 unit, voxelized at the given edge,
// and V = Num * voxel^3 * X^3. Using the label frame makes the count
// invariant under rigid motions of the scene and monotone under point
// addition.
VolumeResult panicleVolume(const PointCloud& panicle, const Calibration& calib,
                           double voxel = 0.01);

}  // namespace panicle

#endif

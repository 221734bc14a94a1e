#ifndef PANICLE_SEGMENTATION_HPP
#define PANICLE_SEGMENTATION_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "panicle/types.hpp"

namespace panicle {

struct CandidateMask {
    BinaryMask mask;
    double stability = 1.0;

    std::size_t area() const { return mask.area(); }
};

enum class InstanceClass { Panicle, Label };

struct RoughInstance {
    BinaryMask mask;
    InstanceClass class_label = InstanceClass::Panicle;
};

// Keeps candidates with area >= min_area and stability >= min_stability
// (strictly-below values are removed; boundaries are kept).
std::vector<CandidateMask> filterCandidates(const std::vector<CandidateMask>& candidates,
                                            std::size_t min_area = 10000,
                                            double min_stability = 0.8);

// Morphological erosion/dilation with a disc structuring element
// {(dx,dy) : dx^2+dy^2 <= radius^2}. Radius 0 is the identity. Pixels
// outside the mask bounds count as background.
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask dilate(const BinaryMask& mask, int radius);

// n foreground pixels drawn uniformly without replacement (all of them if
// fewer than n exist), deterministic given seed. Throws on an empty mask.
std::vector<std::pair<int, int>> sampleMask(const BinaryMask& mask, std::size_t n,
                                            std::uint64_t seed);

struct MergeResult {
    BinaryMask mask;
    int matched_count = 0;
    bool fell_back_to_rough = false;  // no fine mask matched (or none supplied)
};

// Ensemble refinement: erode + sample the rough mask, match fine masks that
// (a) contain a sampled point and (b) lie mostly inside the dilated rough
// mask, and merge the matches. Falls back to the rough mask when nothing
// matches.
MergeResult matchAndMerge(const RoughInstance& rough, const std::vector<CandidateMask>& fines,
                          int erosion_radius = 5, std::size_t n_samples = 200,
                          std::uint64_t seed = 0, double containment_min = 0.5);

// RGB + mask -> RGBA with alpha 255 on foreground, 0 elsewhere.
ImageBuffer applyMask(const ImageBuffer& image, const BinaryMask& mask);

struct SegMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double iou = 0.0;
};

SegMetrics segMetrics(const BinaryMask& pred, const BinaryMask& gt);

// Jaccard index of the edge-pixel sets (4-connectivity inner boundary,
// out-of-bounds counts as background); 1 when both edge sets are empty.
double boundaryOverlap(const BinaryMask& pred, const BinaryMask& gt);

}  // namespace panicle

#endif

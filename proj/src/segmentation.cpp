#include "panicle/segmentation.hpp"

#include <algorithm>

#include "panicle/rng.hpp"

namespace panicle {

namespace {

void requireSameDims(const BinaryMask& a, const BinaryMask& b, const char* what) {
    if (a.width != b.width || a.height != b.height)
        throw UsageError(std::string(what) + ": mask dimensions differ");
}

std::vector<std::pair<int, int>> discOffsets(int radius) {
    std::vector<std::pair<int, int>> offs;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) offs.emplace_back(dx, dy);
    return offs;
}

BinaryMask edgePixels(const BinaryMask& m) {
    BinaryMask edges(m.width, m.height);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            const bool boundary =
                x == 0 || !m.at(x - 1, y) || x == m.width - 1 || !m.at(x + 1, y) ||
                y == 0 || !m.at(x, y - 1) || y == m.height - 1 || !m.at(x, y + 1);
            if (boundary) edges.set(x, y, true);
        }
    }
    return edges;
}

}  // namespace

std::vector<CandidateMask> filterCandidates(const std::vector<CandidateMask>& candidates,
                                            std::size_t min_area, double min_stability) {
    std::vector<CandidateMask> kept;
    for (const CandidateMask& c : candidates)
        if (c.area() >= min_area && c.stability >= min_stability) kept.push_back(c);
    return kept;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
    if (radius < 0) throw UsageError("erode: radius must be nonnegative");
    if (radius == 0) return mask;
    const auto offs = discOffsets(radius);
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            bool keep = true;
            for (const auto& [dx, dy] : offs) {
                const int nx = x + dx, ny = y + dy;
                if (!mask.inBounds(nx, ny) || !mask.at(nx, ny)) {
                    keep = false;
                    break;
                }
            }
            if (keep) out.set(x, y, true);
        }
    }
    return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius < 0) throw UsageError("dilate: radius must be nonnegative");
    if (radius == 0) return mask;
    const auto offs = discOffsets(radius);
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (const auto& [dx, dy] : offs) {
                const int nx = x + dx, ny = y + dy;
                if (mask.inBounds(nx, ny)) out.set(nx, ny, true);
            }
        }
    }
    return out;
}

std::vector<std::pair<int, int>> sampleMask(const BinaryMask& mask, std::size_t n,
                                            std::uint64_t seed) {
    std::vector<std::pair<int, int>> fg;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) fg.emplace_back(x, y);
    if (fg.empty()) throw UsageError("sampleMask: empty mask");
    if (n >= fg.size()) return fg;
    // Partial Fisher-Yates: the first n slots end up a uniform sample.
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.below(fg.size() - i);
        std::swap(fg[i], fg[j]);
    }
    fg.resize(n);
    return fg;
}

MergeResult matchAndMerge(const RoughInstance& rough, const std::vector<CandidateMask>& fines,
                          int erosion_radius, std::size_t n_samples, std::uint64_t seed,
                          double containment_min) {
    if (rough.mask.emptyMask()) throw UsageError("matchAndMerge: empty rough mask");
    if (fines.empty()) return {rough.mask, 0, true};

    BinaryMask eroded = erode(rough.mask, erosion_radius);
    if (eroded.emptyMask()) eroded = rough.mask;  // thin instance: sample the raw mask
    const auto samples = sampleMask(eroded, n_samples, seed);
    const BinaryMask dilated = dilate(rough.mask, erosion_radius);

    MergeResult result;
    result.mask = BinaryMask(rough.mask.width, rough.mask.height);
    for (const CandidateMask& fine : fines) {
        requireSameDims(fine.mask, rough.mask, "matchAndMerge");
        bool hit = false;
        for (const auto& [x, y] : samples) {
            if (fine.mask.at(x, y)) {
                hit = true;
                break;
            }
        }
        if (!hit) continue;
        std::size_t inside = 0;
        const std::size_t fine_area = fine.area();
        for (int y = 0; y < fine.mask.height && fine_area > 0; ++y)
            for (int x = 0; x < fine.mask.width; ++x)
                if (fine.mask.at(x, y) && dilated.at(x, y)) ++inside;
        if (fine_area == 0 ||
            static_cast<double>(inside) / static_cast<double>(fine_area) < containment_min)
            continue;
        for (std::size_t i = 0; i < result.mask.bits.size(); ++i)
            result.mask.bits[i] |= fine.mask.bits[i];
        ++result.matched_count;
    }
    if (result.matched_count == 0) {
        result.mask = rough.mask;
        result.fell_back_to_rough = true;
    }
    return result;
}

ImageBuffer applyMask(const ImageBuffer& image, const BinaryMask& mask) {
    if (image.width != mask.width || image.height != mask.height)
        throw UsageError("applyMask: image and mask dimensions differ");
    if (image.channels != 3 && image.channels != 1)
        throw UsageError("applyMask: expected RGB or grayscale input");
    ImageBuffer out(image.width, image.height, 4);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const std::uint8_t* src = image.pixel(x, y);
            std::uint8_t* dst = out.pixel(x, y);
            if (image.channels == 3) {
                dst[0] = src[0];
                dst[1] = src[1];
                dst[2] = src[2];
            } else {
                dst[0] = dst[1] = dst[2] = src[0];
            }
            dst[3] = mask.at(x, y) ? 255 : 0;
        }
    }
    return out;
}

SegMetrics segMetrics(const BinaryMask& pred, const BinaryMask& gt) {
    requireSameDims(pred, gt, "segMetrics");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.bits.size(); ++i) {
        const bool p = pred.bits[i] != 0, g = gt.bits[i] != 0;
        tp += (p && g);
        fp += (p && !g);
        fn += (!p && g);
    }
    SegMetrics m;
    m.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall > 0.0)
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.iou = (tp + fp + fn) ? static_cast<double>(tp) / (tp + fp + fn) : 1.0;
    return m;
}

double boundaryOverlap(const BinaryMask& pred, const BinaryMask& gt) {
    requireSameDims(pred, gt, "boundaryOverlap");
    const BinaryMask ep = edgePixels(pred), eg = edgePixels(gt);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < ep.bits.size(); ++i) {
        const bool a = ep.bits[i] != 0, b = eg.bits[i] != 0;
        inter += (a && b);
        uni += (a || b);
    }
    return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
}

}  // namespace panicle

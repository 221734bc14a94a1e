#include "panicle/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace panicle {

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    axis_.assign(points_.size(), 0);
    if (!points_.empty()) build(0, points_.size());
}

void KdTree::build(std::size_t lo, std::size_t hi) {
    if (hi - lo <= 1) return;
    // Split along the widest extent of this range.
    Vec3 mn = points_[order_[lo]], mx = mn;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const Vec3& p = points_[order_[i]];
        for (int a = 0; a < 3; ++a) {
            mn[a] = std::min(mn[a], p[a]);
            mx[a] = std::max(mx[a], p[a]);
        }
    }
    int axis = 0;
    double w = mx[0] - mn[0];
    for (int a = 1; a < 3; ++a) {
        if (mx[a] - mn[a] > w) {
            w = mx[a] - mn[a];
            axis = a;
        }
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                         const double ca = points_[a][axis], cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    axis_[mid] = static_cast<std::uint8_t>(axis);
    build(lo, mid);
    build(mid + 1, hi);
}

std::vector<std::size_t> KdTree::knn(const Vec3& query, std::size_t k) const {
    if (points_.empty()) throw UsageError("knn: empty point cloud");
    if (k > points_.size()) throw UsageError("knn: k exceeds cloud size");
    if (k == 0) return {};
    std::vector<HeapEntry> heap;
    heap.reserve(k + 1);
    searchKnn(0, points_.size(), query, k, heap);
    std::sort_heap(heap.begin(), heap.end());
    std::vector<std::size_t> out(heap.size());
    for (std::size_t i = 0; i < heap.size(); ++i) out[i] = heap[i].index;
    return out;
}

void KdTree::searchKnn(std::size_t lo, std::size_t hi, const Vec3& q, std::size_t k,
                       std::vector<HeapEntry>& heap) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t idx = order_[mid];
    const double d2 = (points_[idx] - q).squaredNorm();
    const HeapEntry cand{d2, idx};
    if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
    } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
    }
    if (hi - lo == 1) return;

    const int axis = axis_[mid];
    const double delta = q[axis] - points_[idx][axis];
    const bool goLeftFirst = delta < 0.0;
    const auto visit = [&](bool left) {
        if (left)
            searchKnn(lo, mid, q, k, heap);
        else
            searchKnn(mid + 1, hi, q, k, heap);
    };
    visit(goLeftFirst);
    // The far side can still hold a winner when the slab distance does not
    // exceed the current worst (ties included: equal distance, lower index).
    if (heap.size() < k || delta * delta <= heap.front().d2) visit(!goLeftFirst);
}

std::vector<std::size_t> KdTree::radius(const Vec3& query, double r) const {
    std::vector<std::size_t> out;
    if (points_.empty() || r < 0.0) return out;
    searchRadius(0, points_.size(), query, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
}

void KdTree::searchRadius(std::size_t lo, std::size_t hi, const Vec3& q, double r2,
                          std::vector<std::size_t>& out) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t idx = order_[mid];
    if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
    if (hi - lo == 1) return;
    const int axis = axis_[mid];
    const double delta = q[axis] - points_[idx][axis];
    if (delta < 0.0) {
        searchRadius(lo, mid, q, r2, out);
        if (delta * delta <= r2) searchRadius(mid + 1, hi, q, r2, out);
    } else {
        searchRadius(mid + 1, hi, q, r2, out);
        if (delta * delta <= r2) searchRadius(lo, mid, q, r2, out);
    }
}

}  // namespace panicle

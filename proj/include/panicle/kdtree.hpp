#ifndef PANICLE_KDTREE_HPP
#define PANICLE_KDTREE_HPP

#include <cstddef>
#include <vector>

#include "panicle/types.hpp"

namespace panicle {

// Exact nearest-neighbor search. Results are exact (no approximation);
// distance ties are broken by the lower point index so queries are
// deterministic regardless of tree layout.
class KdTree {
public:
    explicit KdTree(std::vector<Vec3> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    // Indices of the k nearest points, ordered by (distance, index).
    // Throws UsageError on an empty tree or k > size().
    std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;

    // All indices within radius (inclusive), sorted ascending.
    std::vector<std::size_t> radius(const Vec3& query, double r) const;

private:
    struct HeapEntry {
        double d2;
        std::size_t index;
        bool operator<(const HeapEntry& o) const {
            return d2 < o.d2 || (d2 == o.d2 && index < o.index);
        }
    };

    void build(std::size_t lo, std::size_t hi);
    void searchKnn(std::size_t lo, std::size_t hi, const Vec3& q, std::size_t k,
                   std::vector<HeapEntry>& heap) const;
    void searchRadius(std::size_t lo, std::size_t hi, const Vec3& q, double r2,
                      std::vector<std::size_t>& out) const;

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;  // tree layout: median at midpoint of each range
    std::vector<std::uint8_t> axis_;  // split axis per range midpoint
};

}  // namespace panicle

#endif

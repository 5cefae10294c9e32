#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

namespace sparsematte {

/// Exact k-nearest-neighbor index over fixed-dimension points. Results are ordered by
/// (squared distance, point index), so they match a brute-force scan exactly.
template <int Dim>
class KdTree {
public:
    using Point = Eigen::Matrix<double, Dim, 1>;

    explicit KdTree(const std::vector<Point>& points, int leaf_size = 8)
        : points_(points), order_(points.size()), leaf_size_(std::max(leaf_size, 1)) {
        std::iota(order_.begin(), order_.end(), std::uint32_t{0});
        if (!points_.empty()) {
            nodes_.reserve(2 * points_.size() / static_cast<std::size_t>(leaf_size_) + 2);
            build(0, static_cast<std::uint32_t>(points_.size()));
        }
    }

    [[nodiscard]] std::size_t size() const { return points_.size(); }

    /// k nearest points to points_[self], excluding self.
    [[nodiscard]] std::vector<std::pair<double, std::uint32_t>> neighbors_of(std::uint32_t self, int k) const {
        return query(points_[self], k, self);
    }

    /// k nearest points to `q`; `exclude` is skipped (pass size() to keep everything).
    [[nodiscard]] std::vector<std::pair<double, std::uint32_t>> query(const Point& q, int k,
                                                                      std::uint32_t exclude) const {
        Heap heap;
        if (k > 0 && !nodes_.empty()) {
            search(0, q, static_cast<std::size_t>(k), exclude, heap);
        }
        std::vector<std::pair<double, std::uint32_t>> out;
        out.reserve(heap.size());
        while (!heap.empty()) {
            out.push_back(heap.top());
            heap.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    struct Node {
        std::uint32_t begin;
        std::uint32_t end;
        std::int32_t left = -1;
        std::int32_t right = -1;
        int axis = 0;
        double split = 0.0;
    };
    // max-heap on (distance^2, index): top is the current worst neighbor
    using Heap = std::priority_queue<std::pair<double, std::uint32_t>>;

    std::int32_t build(std::uint32_t begin, std::uint32_t end) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back({begin, end});
        if (end - begin <= static_cast<std::uint32_t>(leaf_size_)) {
            return id;
        }
        Point lo = points_[order_[begin]];
        Point hi = lo;
        for (std::uint32_t i = begin + 1; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        if (hi[axis] == lo[axis]) {
            return id;  // all points coincide
        }
        const std::uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
        const double split = points_[order_[mid]][axis];
        const std::int32_t left = build(begin, mid);
        const std::int32_t right = build(mid, end);
        nodes_[static_cast<std::size_t>(id)].axis = axis;
        nodes_[static_cast<std::size_t>(id)].split = split;
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    void search(std::int32_t id, const Point& q, std::size_t k, std::uint32_t exclude, Heap& heap) const {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.left < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const std::uint32_t p = order_[i];
                if (p == exclude) {
                    continue;
                }
                const std::pair<double, std::uint32_t> cand{(points_[p] - q).squaredNorm(), p};
                if (heap.size() < k) {
                    heap.push(cand);
                } else if (cand < heap.top()) {
                    heap.pop();
                    heap.push(cand);
                }
            }
            return;
        }
        const double diff = q[node.axis] - node.split;
        const std::int32_t near = diff < 0.0 ? node.left : node.right;
        const std::int32_t far = diff < 0.0 ? node.right : node.left;
        search(near, q, k, exclude, heap);
        // Points on the far side are at least |diff| away along the split axis; equal distances
        // are explored so index tie-breaks stay exact.
        if (heap.size() < k || diff * diff <= heap.top().first) {
            search(far, q, k, exclude, heap);
        }
    }

    std::vector<Point> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    int leaf_size_;
};

}  // namespace sparsematte

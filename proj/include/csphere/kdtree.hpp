#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

#include "csphere/sphere.hpp"

namespace csphere {

/// Exact k-nearest-neighbour tree over points in ℝ^d (median splits, cycling
/// axis). Queries are deterministic: results are sorted by (distance, index).
class KdTree {
  public:
    explicit KdTree(std::vector<RVector> points) : points_(std::move(points)) {
        if (points_.empty()) throw std::invalid_argument("KdTree: no points");
        dim_ = static_cast<int>(points_[0].size());
        std::vector<int> order(points_.size());
        std::iota(order.begin(), order.end(), 0);
        nodes_.reserve(points_.size());
        root_ = build(order, 0, static_cast<int>(order.size()), 0);
    }

    /// Indices of the k nearest points to `query`, excluding index `exclude`.
    std::vector<int> knn(const RVector& query, int k, int exclude = -1) const {
        // max-heap of (squared distance, index); top is the current worst
        std::priority_queue<std::pair<double, int>> heap;
        search(root_, query, k, exclude, heap);
        std::vector<std::pair<double, int>> found;
        found.reserve(heap.size());
        while (!heap.empty()) {
            found.push_back(heap.top());
            heap.pop();
        }
        std::sort(found.begin(), found.end(),
                  [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first < b.first : a.second < b.second;
                  });
        std::vector<int> idx;
        idx.reserve(found.size());
        for (const auto& f : found) idx.push_back(f.second);
        return idx;
    }

    double nearest_distance(const RVector& query, int exclude = -1) const {
        auto idx = knn(query, 1, exclude);
        if (idx.empty()) return std::numeric_limits<double>::infinity();
        return (points_[idx[0]] - query).norm();
    }

    const std::vector<RVector>& points() const { return points_; }

  private:
    struct Node {
        int point;
        int axis;
        int left = -1;
        int right = -1;
    };

    int build(std::vector<int>& order, int lo, int hi, int depth) {
        if (lo >= hi) return -1;
        const int axis = depth % dim_;
        const int mid = lo + (hi - lo) / 2;
        std::nth_element(order.begin() + lo, order.begin() + mid, order.begin() + hi,
                         [&](int a, int b) {
                             const double pa = points_[a](axis), pb = points_[b](axis);
                             return pa != pb ? pa < pb : a < b;
                         });
        const int node = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{order[mid], axis});
        nodes_[node].left = build(order, lo, mid, depth + 1);
        nodes_[node].right = build(order, mid + 1, hi, depth + 1);
        return node;
    }

    void search(int node, const RVector& query, int k, int exclude,
                std::priority_queue<std::pair<double, int>>& heap) const {
        if (node < 0) return;
        const Node& nd = nodes_[node];
        if (nd.point != exclude) {
            const double d2 = (points_[nd.point] - query).squaredNorm();
            if (static_cast<int>(heap.size()) < k) {
                heap.emplace(d2, nd.point);
            } else if (d2 < heap.top().first) {
                heap.pop();
                heap.emplace(d2, nd.point);
            }
        }
        const double delta = query(nd.axis) - points_[nd.point](nd.axis);
        const int near = delta <= 0 ? nd.left : nd.right;
        const int far = delta <= 0 ? nd.right : nd.left;
        search(near, query, k, exclude, heap);
        if (static_cast<int>(heap.size()) < k || delta * delta < heap.top().first) {
            search(far, query, k, exclude, heap);
        }
    }

    std::vector<RVector> points_;
    std::vector<Node> nodes_;
    int dim_ = 0;
    int root_ = -1;
};

/// Largest nearest-neighbour gap of a point set (a proxy for its resolution).
inline double max_nearest_neighbor_distance(const KdTree& tree) {
    double worst = 0.0;
    const auto& pts = tree.points();
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
        worst = std::max(worst, tree.nearest_distance(pts[i], i));
    }
    return worst;
}

}  // namespace csphere

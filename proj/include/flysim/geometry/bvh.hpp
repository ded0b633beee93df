#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "flysim/geometry/shapes.hpp"

namespace flysim {

// Bounding volume hierarchy over primitive boxes. Built top-down with a binned
// surface-area heuristic over primitive centroids (median split as fallback);
// leaves hold at most kMaxLeafSize primitives. Children of node i are i + 1
// and `right`.
class Bvh {
 public:
  static constexpr std::uint32_t kMaxLeafSize = 2;

  struct Node {
    Aabb box;
    std::uint32_t right = 0;   // internal: index of right child
    std::uint32_t first = 0;   // leaf: offset into order()
    std::uint32_t count = 0;   // leaf: primitive count, 0 for internal nodes
    bool leaf() const { return count > 0; }
  };

  Bvh() = default;

  explicit Bvh(std::span<const Aabb> boxes) {
    if (boxes.empty()) return;
    order_.resize(boxes.size());
    std::iota(order_.begin(), order_.end(), 0u);
    std::vector<Vec3> centroids(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) centroids[i] = boxes[i].center();
    nodes_.reserve(2 * boxes.size());
    build(boxes, centroids, 0, static_cast<std::uint32_t>(boxes.size()), 0);
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  // Primitive indices in leaf order.
  const std::vector<std::uint32_t>& order() const { return order_; }
  bool empty() const { return nodes_.empty(); }

 private:
  static constexpr int kBins = 16;
  static constexpr int kMaxSahDepth = 48;

  static double half_area(const Aabb& b) {
    if (b.empty()) return 0.0;
    const Vec3 e = b.extent();
    return e.x() * e.y() + e.y() * e.z() + e.z() * e.x();
  }

  // Returns the split position after partitioning order_[begin, end).
  std::uint32_t split(std::span<const Aabb> boxes, const std::vector<Vec3>& centroids, const Aabb& centroid_box,
                      std::uint32_t begin, std::uint32_t end, bool sah) {
    const Vec3 spread = centroid_box.extent();
    double best_cost = std::numeric_limits<double>::infinity();
    int best_axis = -1;
    int best_bin = 0;
    for (int axis = 0; axis < 3 && sah; ++axis) {
      if (!(spread[axis] > 0.0)) continue;
      const double scale = kBins / spread[axis];
      std::array<Aabb, kBins> bin_box;
      std::array<std::uint32_t, kBins> bin_count{};
      for (std::uint32_t i = begin; i < end; ++i) {
        const int b = bin_of(centroids[order_[i]][axis], centroid_box.lo[axis], scale);
        bin_box[b].extend(boxes[order_[i]]);
        ++bin_count[b];
      }
      std::array<double, kBins> right_cost{};
      Aabb acc;
      std::uint32_t n = 0;
      for (int b = kBins - 1; b > 0; --b) {
        acc.extend(bin_box[b]);
        n += bin_count[b];
        right_cost[b] = n * half_area(acc);
      }
      acc = Aabb{};
      n = 0;
      for (int b = 0; b < kBins - 1; ++b) {
        acc.extend(bin_box[b]);
        n += bin_count[b];
        if (n == 0 || n == end - begin) continue;
        const double cost = n * half_area(acc) + right_cost[b + 1];
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_bin = b;
        }
      }
    }
    if (best_axis >= 0) {
      const double scale = kBins / spread[best_axis];
      const double lo = centroid_box.lo[best_axis];
      const auto it = std::stable_partition(order_.begin() + begin, order_.begin() + end, [&](std::uint32_t i) {
        return bin_of(centroids[i][best_axis], lo, scale) <= best_bin;
      });
      return static_cast<std::uint32_t>(it - order_.begin());
    }
    int axis = 0;
    spread.maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = centroids[a][axis];
                       const double cb = centroids[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    return mid;
  }

  static int bin_of(double c, double lo, double scale) {
    return std::clamp(static_cast<int>((c - lo) * scale), 0, kBins - 1);
  }

  std::uint32_t build(std::span<const Aabb> boxes, const std::vector<Vec3>& centroids, std::uint32_t begin,
                      std::uint32_t end, int depth) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    Aabb centroid_box;
    for (std::uint32_t i = begin; i < end; ++i) {
      box.extend(boxes[order_[i]]);
      centroid_box.extend(centroids[order_[i]]);
    }
    nodes_[index].box = box;

    const std::uint32_t count = end - begin;
    if (count <= kMaxLeafSize) {
      nodes_[index].first = begin;
      nodes_[index].count = count;
      return index;
    }

    // Deep subtrees switch to median splits to bound the traversal stack.
    const std::uint32_t mid = split(boxes, centroids, centroid_box, begin, end, depth < kMaxSahDepth);
    build(boxes, centroids, begin, mid, depth + 1);
    const std::uint32_t right = build(boxes, centroids, mid, end, depth + 1);
    nodes_[index].right = right;
    return index;
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
};

}  // namespace flysim

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace geoloc {

/// Exact Euclidean nearest-neighbor search over fixed-dimension float vectors.
/// Results are ordered by (distance, id); equal distances resolve to the
/// lowest id, the same order a linear scan produces.
class KdTree {
 public:
  struct Neighbor {
    std::int64_t id = 0;
    double squared_distance = 0.0;
  };

  KdTree() = default;
  /// `points` is row-major, `ids.size()` rows of `dim` floats.
  KdTree(std::size_t dim, std::vector<float> points, std::vector<std::int64_t> ids);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }

  Neighbor nearest(std::span<const float> query) const;
  std::vector<Neighbor> k_nearest(std::span<const float> query, std::size_t k) const;

  /// Squared Euclidean distance accumulated in double, shared with the
  /// brute-force reference so both agree bit for bit.
  static double squared_distance(std::span<const float> a, std::span<const float> b);

 private:
  struct Node {
    // Leaf when split_dim < 0: rows [begin, end) of order_.
    int split_dim = -1;
    float split_value = 0.0f;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  std::span<const float> row(std::uint32_t index) const {
    return {points_.data() + static_cast<std::size_t>(index) * dim_, dim_};
  }
  void search(std::int32_t node, std::span<const float> query, std::size_t k,
              std::vector<Neighbor>& heap) const;

  std::size_t dim_ = 0;
  std::vector<float> points_;
  std::vector<std::int64_t> ids_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace geoloc

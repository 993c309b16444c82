#include "geoloc/kdtree.hpp"

#include <algorithm>
#include <limits>

#include "geoloc/error.hpp"

namespace geoloc {

namespace {

constexpr std::uint32_t kLeafSize = 8;

bool closer(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  if (a.squared_distance != b.squared_distance) return a.squared_distance < b.squared_distance;
  return a.id < b.id;
}

}  // namespace

KdTree::KdTree(std::size_t dim, std::vector<float> points, std::vector<std::int64_t> ids)
    : dim_(dim), points_(std::move(points)), ids_(std::move(ids)) {
  if (dim_ == 0 || points_.size() != dim_ * ids_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "point buffer does not match dimension");
  }
  if (ids_.empty()) throw Error(ErrorCode::EmptyInput, "cannot build an empty tree");
  order_.resize(ids_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * ids_.size() / kLeafSize + 1);
  root_ = build(0, static_cast<std::uint32_t>(order_.size()));
}

double KdTree::squared_distance(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum;
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto index = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0f, begin, end, -1, -1});
  if (end - begin <= kLeafSize) return index;

  // Split on the dimension of largest spread.
  int best_dim = 0;
  float best_spread = -1.0f;
  for (std::size_t d = 0; d < dim_; ++d) {
    float lo = std::numeric_limits<float>::max();
    float hi = std::numeric_limits<float>::lowest();
    for (std::uint32_t i = begin; i < end; ++i) {
      const float v = row(order_[i])[d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = static_cast<int>(d);
    }
  }
  if (best_spread <= 0.0f) return index;  // all rows identical

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return row(a)[best_dim] < row(b)[best_dim]; });
  const float split = row(order_[mid])[best_dim];

  nodes_[index].split_dim = best_dim;
  nodes_[index].split_value = split;
  // Left holds values <= split (the nth_element prefix), right holds >= split.
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

void KdTree::search(std::int32_t node_index, std::span<const float> query, std::size_t k,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_index];
  if (node.split_dim < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const Neighbor cand{ids_[order_[i]], squared_distance(query, row(order_[i]))};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = static_cast<double>(query[node.split_dim]) - static_cast<double>(node.split_value);
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;
  search(near, query, k, heap);
  // Equal plane distance must still be visited: a tie there can carry a lower id.
  if (heap.size() < k || diff * diff <= heap.front().squared_distance) {
    search(far, query, k, heap);
  }
}

KdTree::Neighbor KdTree::nearest(std::span<const float> query) const { return k_nearest(query, 1).front(); }

std::vector<KdTree::Neighbor> KdTree::k_nearest(std::span<const float> query, std::size_t k) const {
  if (query.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "query dimension differs from index");
  if (root_ < 0) throw Error(ErrorCode::EmptyInput, "tree is empty");
  k = std::min(k, ids_.size());
  std::vector<Neighbor> heap;
  heap.reserve(k);
  if (k > 0) search(root_, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

}  // namespace geoloc

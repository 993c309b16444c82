#pragma once

#include <span>
#include <variant>
#include <vector>

#include "geoloc/io.hpp"
#include "geoloc/kdtree.hpp"
#include "geoloc/scene.hpp"

namespace geoloc {

/// Training descriptors behind a K-D tree.
class DescriptorIndex {
 public:
  /// Throws EmptyInput or DimensionMismatch.
  static DescriptorIndex build(std::span<const DescriptorRecord> descriptors);

  std::size_t dimension() const { return tree_.dim(); }
  std::size_t size() const { return tree_.size(); }

  FrameId nearest(std::span<const float> query) const;
  std::vector<KdTree::Neighbor> top_k(std::span<const float> query, std::size_t k) const;

 private:
  KdTree tree_;
};

/// Test-only backend: ranks training frames by ||dp|| + lambda * angle
/// against the query's known pose.
struct PoseOracle {
  std::vector<Frame> training;
  double lambda = 1.0;  // meters per radian
};

using RetrievalBackend = std::variant<DescriptorIndex, PoseOracle>;

/// Most similar training frame id. Throws MissingDescriptor / MissingPose when
/// the query lacks what the backend needs.
FrameId query_most_similar(const RetrievalBackend& backend, const Frame& query);

}  // namespace geoloc

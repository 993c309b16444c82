#include "geoloc/retrieval.hpp"

#include <limits>
#include <string>

#include "geoloc/error.hpp"

namespace geoloc {

DescriptorIndex DescriptorIndex::build(std::span<const DescriptorRecord> descriptors) {
  if (descriptors.empty()) throw Error(ErrorCode::EmptyInput, "no descriptors to index");
  const std::size_t dim = descriptors.front().values.size();
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "zero-length descriptor");
  std::vector<float> points;
  std::vector<std::int64_t> ids;
  points.reserve(dim * descriptors.size());
  ids.reserve(descriptors.size());
  for (const auto& d : descriptors) {
    if (d.values.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "descriptor of frame " + std::to_string(d.frame_id) +
                                                    " has dimension " + std::to_string(d.values.size()) +
                                                    ", expected " + std::to_string(dim));
    }
    points.insert(points.end(), d.values.begin(), d.values.end());
    ids.push_back(d.frame_id);
  }
  DescriptorIndex index;
  index.tree_ = KdTree(dim, std::move(points), std::move(ids));
  return index;
}

FrameId DescriptorIndex::nearest(std::span<const float> query) const { return tree_.nearest(query).id; }

std::vector<KdTree::Neighbor> DescriptorIndex::top_k(std::span<const float> query, std::size_t k) const {
  return tree_.k_nearest(query, k);
}

namespace {

struct QueryVisitor {
  const Frame& query;

  FrameId operator()(const DescriptorIndex& index) const {
    if (!query.descriptor) {
      throw Error(ErrorCode::MissingDescriptor, "query frame " + std::to_string(query.id) + " has no descriptor");
    }
    return index.nearest(*query.descriptor);
  }

  FrameId operator()(const PoseOracle& oracle) const {
    if (!query.label_pose) {
      throw Error(ErrorCode::MissingPose, "query frame " + std::to_string(query.id) + " has no pose");
    }
    if (oracle.training.empty()) throw Error(ErrorCode::EmptyInput, "oracle has no training frames");
    FrameId best_id = 0;
    double best = std::numeric_limits<double>::infinity();
    for (const Frame& f : oracle.training) {
      if (!f.label_pose) throw Error(ErrorCode::MissingPose, "training frame without pose");
      const double score =
          (f.label_pose->position() - query.label_pose->position()).norm() +
          oracle.lambda * misalignment_angle(f.label_pose->rotation(), query.label_pose->rotation());
      if (score < best || (score == best && f.id < best_id)) {
        best = score;
        best_id = f.id;
      }
    }
    return best_id;
  }
};

}  // namespace

FrameId query_most_similar(const RetrievalBackend& backend, const Frame& query) {
  return std::visit(QueryVisitor{query}, backend);
}

}  // namespace geoloc

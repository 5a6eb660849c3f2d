#pragma once

// Learned encoder for voxelized contact points. Stack A convolves the 16^3
// heatmap; stack B convolves the heatmap stacked with the voxel-center
// coordinate grid (4 channels). Both are globally average-pooled and fused by
// a linear layer into a 32-d feature.

#include <map>
#include <optional>
#include <vector>

#include "intertraj/ad/nn.hpp"
#include "intertraj/conditioning/providers.hpp"
#include "intertraj/trajectory/voxel.hpp"

namespace intertraj {

struct ContactEncoderDims {
  std::vector<int> channels{8, 16, 32, 32};
  std::vector<int> strides{1, 2, 2, 1};
  int out = kContactFeatureDims;
};

template <typename S>
class ContactEncoder {
 public:
  using Tensor = ad::Tensor<S>;

  ContactEncoder() = default;
  ContactEncoder(std::mt19937_64& rng, ContactEncoderDims dims = {}) : dims_(std::move(dims)) {
    if (dims_.channels.size() != dims_.strides.size() || dims_.channels.empty())
      throw InvalidArgument("contact encoder: channels and strides must have equal, non-zero length");
    int in_a = 1, in_b = 4;
    for (std::size_t i = 0; i < dims_.channels.size(); ++i) {
      stack_a_.emplace_back(in_a, dims_.channels[i], dims_.strides[i], rng);
      stack_b_.emplace_back(in_b, dims_.channels[i], dims_.strides[i], rng);
      in_a = in_b = dims_.channels[i];
    }
    fuse_ = ad::Linear<S>(2 * dims_.channels.back(), dims_.out, rng);
  }

  // heatmaps: n x 4096 in voxel_linear order; coords: 4096 x 3 voxel centers.
  ad::Var<S> operator()(ad::Graph<S>& g, const ad::Var<S>& heatmaps, const Tensor& coords,
                        bool trainable = true) {
    if (heatmaps.cols() != kGridVoxels || coords.rows() != kGridVoxels || coords.cols() != 3)
      throw InvalidArgument("contact encoder: expected n x 4096 heatmaps and a 4096 x 3 grid");
    const Eigen::Index n = heatmaps.rows();
    auto column = ad::reshape(heatmaps, n * kGridVoxels, 1);
    auto a = run(g, stack_a_, column, 0, trainable);
    // The coordinate channels are the same for every sample, so their share of
    // the first convolution of stack B is computed once and tiled.
    auto& first = stack_b_.front();
    auto w = g.param(first.weight(), trainable);
    std::vector<Eigen::Index> heat_rows, coord_rows;
    for (Eigen::Index k = 0; k < 27; ++k) {
      heat_rows.push_back(4 * k);
      for (Eigen::Index c = 1; c < 4; ++c) coord_rows.push_back(4 * k + c);
    }
    const Eigen::Index c0 = first.out_channels();
    auto heat_part = ad::conv3d(column, ad::gather_rows(w, heat_rows), g.param(first.bias(), trainable), kGridSide,
                                first.stride());
    auto coord_part = ad::conv3d(g.constant_ref(coords), ad::gather_rows(w, coord_rows),
                                 g.constant(Tensor::Zero(1, c0)), kGridSide, first.stride());
    auto b = ad::relu(ad::add_tiled(heat_part, coord_part));
    b = run(g, stack_b_, b, 1, trainable);
    return fuse_(g, ad::concat_cols(std::vector<ad::Var<S>>{a, b}), trainable);
  }

  const ContactEncoderDims& dims() const { return dims_; }

  void collect(const std::string& prefix, ad::ParameterList<S>& out) {
    for (std::size_t i = 0; i < stack_a_.size(); ++i) stack_a_[i].collect(prefix + ".heat." + std::to_string(i), out);
    for (std::size_t i = 0; i < stack_b_.size(); ++i) stack_b_[i].collect(prefix + ".grid." + std::to_string(i), out);
    fuse_.collect(prefix + ".fuse", out);
  }

 private:
  // Applies stack[first..] to x, which is at the resolution after stack[0..first).
  ad::Var<S> run(ad::Graph<S>& g, std::vector<ad::Conv3d<S>>& stack, ad::Var<S> x, std::size_t first,
                 bool trainable) {
    Eigen::Index side = kGridSide;
    for (std::size_t i = 0; i < first; ++i) side = ad::conv3_output_side(side, stack[i].stride());
    for (std::size_t i = first; i < stack.size(); ++i) {
      x = ad::relu(stack[i](g, x, side, trainable));
      side = ad::conv3_output_side(side, stack[i].stride());
    }
    return ad::group_mean_rows(x, side * side * side);
  }

  ContactEncoderDims dims_;
  std::vector<ad::Conv3d<S>> stack_a_, stack_b_;
  ad::Linear<S> fuse_;
};

// Heatmaps for a list of contact points, deduplicated by voxel. Points in the
// same voxel produce identical heatmaps, so each distinct voxel is encoded once
// and `gather` maps every input back to its row. Missing points (no contact)
// map to an all-zero heatmap.
template <typename S>
struct HeatmapBatch {
  ad::Tensor<S> heatmaps;               // unique x 4096
  std::vector<Eigen::Index> gather;     // one entry per input point
};

template <typename S>
HeatmapBatch<S> make_heatmap_batch(const std::vector<std::optional<Vec3>>& points, const GridBounds& bounds,
                                   double sigma_voxels) {
  std::map<int, Eigen::Index> slot;
  std::vector<int> keys;
  HeatmapBatch<S> batch;
  batch.gather.reserve(points.size());
  for (const auto& p : points) {
    const int key = p ? voxel_linear(voxel_of(*p, bounds)) : -1;
    auto [it, inserted] = slot.emplace(key, static_cast<Eigen::Index>(keys.size()));
    if (inserted) keys.push_back(key);
    batch.gather.push_back(it->second);
  }
  batch.heatmaps.setZero(static_cast<Eigen::Index>(keys.size()), kGridVoxels);
  for (std::size_t r = 0; r < keys.size(); ++r) {
    if (keys[r] < 0) continue;
    const VoxelIndex v{keys[r] % kGridSide, (keys[r] / kGridSide) % kGridSide, keys[r] / (kGridSide * kGridSide)};
    batch.heatmaps.row(static_cast<Eigen::Index>(r)) = heatmap_at_voxel(v, sigma_voxels).transpose().cast<S>();
  }
  return batch;
}

// Encodes the points of a HeatmapBatch into one feature row per input point.
template <typename S>
ad::Var<S> encode_contact_batch(ad::Graph<S>& g, ContactEncoder<S>& enc, const HeatmapBatch<S>& batch,
                                const ad::Tensor<S>& coords, bool trainable = true) {
  auto unique = enc(g, g.constant(batch.heatmaps), coords, trainable);
  return ad::gather_rows(unique, batch.gather);
}

}  // namespace intertraj

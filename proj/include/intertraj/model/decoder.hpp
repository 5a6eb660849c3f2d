#pragma once

// Conditioned trajectory decoder shared by the codebook, the predictor
// variants and the diffusion heads: per-step joint features are projected to
// the model width and attended by T trainable queries; two MLP heads read out
// pose parameters and contact logits.

#include "intertraj/ad/nn.hpp"
#include "intertraj/hand/types.hpp"

namespace intertraj {

struct DecoderDims {
  Eigen::Index in_width = 1824;
  int horizon = 30;
  ad::TransformerDims transformer{512, 1024, 0.2};
};

template <typename S>
class TrajectoryDecoder {
 public:
  using Tensor = ad::Tensor<S>;

  struct Output {
    ad::Var<S> pose;            // B*T x 99, translation normalized to the grid box
    ad::Var<S> contact_logits;  // B*T x 778
  };

  TrajectoryDecoder() = default;
  TrajectoryDecoder(const DecoderDims& dims, std::mt19937_64& rng)
      : dims_(dims),
        input_(dims.in_width, dims.transformer.width, rng),
        memory_pos_(ad::normal_init<S>(dims.horizon, dims.transformer.width, 0.02, rng)),
        queries_(ad::normal_init<S>(dims.horizon, dims.transformer.width, 0.02, rng)),
        layer_(dims.transformer, rng),
        pose_head_({dims.transformer.width, dims.transformer.width, kPoseDims}, rng),
        contact_head_({dims.transformer.width, dims.transformer.width, dims.transformer.width, kNumVertices}, rng) {
    // Start every rotation block at the identity.
    auto& bias = pose_head_.layer(1).bias().value;
    for (int j = 0; j <= kNumArticulated; ++j) {
      bias(0, 6 * j) = S(1);
      bias(0, 6 * j + 4) = S(1);
    }
  }

  // joint: B*T x in_width, rows grouped by sequence.
  Output operator()(ad::Graph<S>& g, const ad::Var<S>& joint, bool trainable = true) {
    const Eigen::Index T = dims_.horizon;
    if (joint.cols() != dims_.in_width || joint.rows() % T != 0)
      throw InvalidArgument("decoder: expected B*T x " + std::to_string(dims_.in_width) + " joint features");
    const Eigen::Index batches = joint.rows() / T;
    auto memory = ad::add_tiled(input_(g, joint, trainable), g.param(memory_pos_, trainable));
    auto queries = ad::tile_rows(g.param(queries_, trainable), batches);
    auto h = layer_(g, queries, memory, batches, trainable);
    return {pose_head_(g, h, trainable), contact_head_(g, h, trainable)};
  }

  const DecoderDims& dims() const { return dims_; }

  ad::Linear<S>& input_layer() { return input_; }

  void collect(const std::string& prefix, ad::ParameterList<S>& out) {
    input_.collect(prefix + ".input", out);
    out.push_back({prefix + ".memory_pos", &memory_pos_});
    out.push_back({prefix + ".queries", &queries_});
    layer_.collect(prefix + ".layer", out);
    pose_head_.collect(prefix + ".pose_head", out);
    contact_head_.collect(prefix + ".contact_head", out);
  }

  void collect_contact_head(const std::string& prefix, ad::ParameterList<S>& out) {
    contact_head_.collect(prefix + ".contact_head", out);
  }

 private:
  DecoderDims dims_;
  ad::Linear<S> input_;
  ad::Parameter<S> memory_pos_;
  ad::Parameter<S> queries_;
  ad::TransformerDecoderLayer<S> layer_;
  ad::Mlp<S> pose_head_;
  ad::Mlp<S> contact_head_;
};

}  // namespace intertraj

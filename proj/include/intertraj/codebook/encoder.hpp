#pragma once

// Trajectory encoder: per-step linear projection of the 877-d step vector,
// learned positional embeddings, one single-head self-attention layer.

#include "intertraj/ad/nn.hpp"
#include "intertraj/model/batch.hpp"

namespace intertraj {

struct EncoderDims {
  Eigen::Index in_width = kEncoderInputDims;
  int horizon = 30;
  ad::TransformerDims transformer{512, 1024, 0.1};
};

template <typename S>
class TrajectoryEncoder {
 public:
  TrajectoryEncoder() = default;
  TrajectoryEncoder(const EncoderDims& dims, std::mt19937_64& rng)
      : dims_(dims),
        input_(dims.in_width, dims.transformer.width, rng),
        pos_(ad::normal_init<S>(dims.horizon, dims.transformer.width, 0.02, rng)),
        layer_(dims.transformer, rng) {}

  // x: B*T x in_width -> B*T x width.
  ad::Var<S> operator()(ad::Graph<S>& g, const ad::Var<S>& x, bool trainable = true) {
    const Eigen::Index T = dims_.horizon;
    if (x.cols() != dims_.in_width || x.rows() % T != 0)
      throw InvalidArgument("encoder: expected B*T x " + std::to_string(dims_.in_width) + " inputs with T = " +
                            std::to_string(T));
    auto h = ad::add_tiled(input_(g, x, trainable), g.param(pos_, trainable));
    return layer_(g, h, x.rows() / T, trainable);
  }

  const EncoderDims& dims() const { return dims_; }

  void collect(const std::string& prefix, ad::ParameterList<S>& out) {
    input_.collect(prefix + ".input", out);
    out.push_back({prefix + ".pos", &pos_});
    layer_.collect(prefix + ".layer", out);
  }

 private:
  EncoderDims dims_;
  ad::Linear<S> input_;
  ad::Parameter<S> pos_;
  ad::TransformerEncoderLayer<S> layer_;
};

}  // namespace intertraj

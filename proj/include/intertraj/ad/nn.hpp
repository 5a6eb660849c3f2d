#pragma once

// Layers built on the ad ops. Every layer owns its Parameters and can list
// them under hierarchical names for checkpointing and optimization.

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "intertraj/ad/ops.hpp"
#include "intertraj/ad/ops_geometry.hpp"

namespace intertraj::ad {

template <typename S>
struct NamedParameter {
  std::string name;
  Parameter<S>* param;
};

template <typename S>
using ParameterList = std::vector<NamedParameter<S>>;

template <typename S>
Tensor<S> uniform_init(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<S> t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<S>(dist(rng));
  return t;
}

template <typename S>
Tensor<S> normal_init(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor<S> t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<S>(dist(rng));
  return t;
}

template <typename S>
std::size_t parameter_count(const ParameterList<S>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.param->size());
  return n;
}

template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng)
      : weight_(uniform_init<S>(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng)),
        bias_(Tensor<S>::Zero(1, out)) {}

  Var<S> operator()(Graph<S>& g, const Var<S>& x, bool trainable = true) {
    return linear(x, g.param(weight_, trainable), g.param(bias_, trainable));
  }

  Eigen::Index in_features() const { return weight_.value.rows(); }
  Eigen::Index out_features() const { return weight_.value.cols(); }
  Parameter<S>& weight() { return weight_; }
  Parameter<S>& bias() { return bias_; }

  void collect(const std::string& prefix, ParameterList<S>& out) {
    out.push_back({prefix + ".weight", &weight_});
    out.push_back({prefix + ".bias", &bias_});
  }

 private:
  Parameter<S> weight_;
  Parameter<S> bias_;
};

template <typename S>
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(Eigen::Index width)
      : gamma_(Tensor<S>::Ones(1, width)), beta_(Tensor<S>::Zero(1, width)) {}

  Var<S> operator()(Graph<S>& g, const Var<S>& x, bool trainable = true) {
    return layer_norm(x, g.param(gamma_, trainable), g.param(beta_, trainable));
  }

  void collect(const std::string& prefix, ParameterList<S>& out) {
    out.push_back({prefix + ".gamma", &gamma_});
    out.push_back({prefix + ".beta", &beta_});
  }

 private:
  Parameter<S> gamma_;
  Parameter<S> beta_;
};

// Stack of Linear layers with ReLU between them (none after the last).
template <typename S>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<Eigen::Index>& widths, std::mt19937_64& rng) {
    if (widths.size() < 2) throw InvalidArgument("Mlp needs at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) layers_.emplace_back(widths[i], widths[i + 1], rng);
  }

  Var<S> operator()(Graph<S>& g, Var<S> x, bool trainable = true) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      x = layers_[i](g, x, trainable);
      if (i + 1 < layers_.size()) x = relu(x);
    }
    return x;
  }

  std::size_t depth() const { return layers_.size(); }
  Eigen::Index in_features() const { return layers_.front().in_features(); }
  Eigen::Index out_features() const { return layers_.back().out_features(); }
  Linear<S>& layer(std::size_t i) { return layers_.at(i); }

  void collect(const std::string& prefix, ParameterList<S>& out) {
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(prefix + "." + std::to_string(i), out);
  }

 private:
  std::vector<Linear<S>> layers_;
};

// Single-head attention with input and output projections.
template <typename S>
class Attention {
 public:
  Attention() = default;
  Attention(Eigen::Index width, std::mt19937_64& rng)
      : q_(width, width, rng), k_(width, width, rng), v_(width, width, rng), o_(width, width, rng) {}

  // queries: batches*tq x d, memory: batches*tk x d
  Var<S> operator()(Graph<S>& g, const Var<S>& queries, const Var<S>& memory, Eigen::Index batches,
                    bool trainable = true) {
    auto q = q_(g, queries, trainable);
    auto k = k_(g, memory, trainable);
    auto v = v_(g, memory, trainable);
    return o_(g, attention(q, k, v, batches), trainable);
  }

  void collect(const std::string& prefix, ParameterList<S>& out) {
    q_.collect(prefix + ".q", out);
    k_.collect(prefix + ".k", out);
    v_.collect(prefix + ".v", out);
    o_.collect(prefix + ".o", out);
  }

 private:
  Linear<S> q_, k_, v_, o_;
};

struct TransformerDims {
  Eigen::Index width = 512;
  Eigen::Index ffn = 1024;
  double dropout = 0.1;
};

// Post-norm encoder layer: x = LN(x + SA(x)); x = LN(x + FFN(x)).
template <typename S>
class TransformerEncoderLayer {
 public:
  TransformerEncoderLayer() = default;
  TransformerEncoderLayer(const TransformerDims& dims, std::mt19937_64& rng)
      : dims_(dims), attn_(dims.width, rng), ln1_(dims.width), ffn_({dims.width, dims.ffn, dims.width}, rng),
        ln2_(dims.width) {}

  Var<S> operator()(Graph<S>& g, Var<S> x, Eigen::Index batches, bool trainable = true) {
    x = ln1_(g, add(x, dropout(attn_(g, x, x, batches, trainable), dims_.dropout)), trainable);
    x = ln2_(g, add(x, dropout(ffn_(g, x, trainable), dims_.dropout)), trainable);
    return x;
  }

  const TransformerDims& dims() const { return dims_; }

  void collect(const std::string& prefix, ParameterList<S>& out) {
    attn_.collect(prefix + ".self_attn", out);
    ln1_.collect(prefix + ".ln1", out);
    ffn_.collect(prefix + ".ffn", out);
    ln2_.collect(prefix + ".ln2", out);
  }

 private:
  TransformerDims dims_;
  Attention<S> attn_;
  LayerNorm<S> ln1_;
  Mlp<S> ffn_;
  LayerNorm<S> ln2_;
};

// Post-norm decoder layer: self-attention over the queries, cross-attention
// into the memory, then feed-forward.
template <typename S>
class TransformerDecoderLayer {
 public:
  TransformerDecoderLayer() = default;
  TransformerDecoderLayer(const TransformerDims& dims, std::mt19937_64& rng)
      : dims_(dims), self_attn_(dims.width, rng), ln1_(dims.width), cross_attn_(dims.width, rng), ln2_(dims.width),
        ffn_({dims.width, dims.ffn, dims.width}, rng), ln3_(dims.width) {}

  Var<S> operator()(Graph<S>& g, Var<S> x, const Var<S>& memory, Eigen::Index batches, bool trainable = true) {
    x = ln1_(g, add(x, dropout(self_attn_(g, x, x, batches, trainable), dims_.dropout)), trainable);
    x = ln2_(g, add(x, dropout(cross_attn_(g, x, memory, batches, trainable), dims_.dropout)), trainable);
    x = ln3_(g, add(x, dropout(ffn_(g, x, trainable), dims_.dropout)), trainable);
    return x;
  }

  const TransformerDims& dims() const { return dims_; }

  void collect(const std::string& prefix, ParameterList<S>& out) {
    self_attn_.collect(prefix + ".self_attn", out);
    ln1_.collect(prefix + ".ln1", out);
    cross_attn_.collect(prefix + ".cross_attn", out);
    ln2_.collect(prefix + ".ln2", out);
    ffn_.collect(prefix + ".ffn", out);
    ln3_.collect(prefix + ".ln3", out);
  }

 private:
  TransformerDims dims_;
  Attention<S> self_attn_;
  LayerNorm<S> ln1_;
  Attention<S> cross_attn_;
  LayerNorm<S> ln2_;
  Mlp<S> ffn_;
  LayerNorm<S> ln3_;
};

template <typename S>
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(Eigen::Index in_channels, Eigen::Index out_channels, Eigen::Index stride, std::mt19937_64& rng)
      : stride_(stride),
        weight_(uniform_init<S>(27 * in_channels, out_channels, 1.0 / std::sqrt(27.0 * in_channels), rng)),
        bias_(Tensor<S>::Zero(1, out_channels)) {}

  Var<S> operator()(Graph<S>& g, const Var<S>& x, Eigen::Index side, bool trainable = true) {
    return conv3d(x, g.param(weight_, trainable), g.param(bias_, trainable), side, stride_);
  }

  Eigen::Index stride() const { return stride_; }
  Eigen::Index in_channels() const { return weight_.value.rows() / 27; }
  Eigen::Index out_channels() const { return weight_.value.cols(); }
  Parameter<S>& weight() { return weight_; }
  Parameter<S>& bias() { return bias_; }

  void collect(const std::string& prefix, ParameterList<S>& out) {
    out.push_back({prefix + ".weight", &weight_});
    out.push_back({prefix + ".bias", &bias_});
  }

 private:
  Eigen::Index stride_ = 1;
  Parameter<S> weight_;
  Parameter<S> bias_;
};

}  // namespace intertraj::ad

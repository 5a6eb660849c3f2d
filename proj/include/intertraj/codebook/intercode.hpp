#pragma once

// InterCode: encoder -> residual VQ -> conditioned decoder, trained with the
// five-term interaction loss plus a commitment term.

#include <cstdint>
#include <random>

#include "intertraj/codebook/encoder.hpp"
#include "intertraj/codebook/rvq.hpp"
#include "intertraj/conditioning/contact_encoder.hpp"
#include "intertraj/model/batch.hpp"
#include "intertraj/model/decoder.hpp"
#include "intertraj/model/loss.hpp"

namespace intertraj {

struct InterCodeConfig {
  int horizon = 30;
  RvqConfig rvq;
  Eigen::Index encoder_ffn = 1024;
  double encoder_dropout = 0.1;
  ad::TransformerDims decoder{512, 1024, 0.2};
  ContactEncoderDims contact;
  double commitment = 0.25;
  double sigma_voxels = 1.0;
  LossWeights weights;
  bool use_contact_loss = true;

  Eigen::Index joint_width() const { return rvq.E + kTextDims + kImageDims + contact.out; }

  void validate() const {
    rvq.validate();
    require(horizon >= 1, "horizon must be at least 1");
    require(decoder.width >= 1 && decoder.ffn >= 1 && encoder_ffn >= 1, "model widths must be positive");
    require(sigma_voxels > 0.0, "contact sigma must be positive");
    require(commitment >= 0.0, "commitment weight must be non-negative");
  }
};

template <typename S>
class InterCode {
 public:
  using Tensor = ad::Tensor<S>;

  struct Forward {
    ad::Var<S> total;
    LossResult<S> loss;
    double commitment = 0.0;
    Quantization<S> quant;
    ad::Var<S> features;  // encoder output
    ad::Var<S> pose;      // B*T x 99, meters
    ad::Var<S> logits;    // B*T x 778
  };

  InterCode(const InterCodeConfig& cfg, const GridBounds& bounds, std::uint64_t seed)
      : cfg_(cfg), bounds_(bounds), scaling_(TranslationScaling::from_bounds(bounds)) {
    cfg_.validate();
    bounds_.validate();
    std::mt19937_64 rng(seed);
    encoder_ = TrajectoryEncoder<S>(
        EncoderDims{kEncoderInputDims, cfg_.horizon, {cfg_.rvq.E, cfg_.encoder_ffn, cfg_.encoder_dropout}}, rng);
    rvq_ = ResidualVQ<S>(cfg_.rvq, rng);
    contact_ = ContactEncoder<S>(rng, cfg_.contact);
    decoder_ = TrajectoryDecoder<S>(DecoderDims{cfg_.joint_width(), cfg_.horizon, cfg_.decoder}, rng);
    coords_ = coordinate_grid(bounds_).template cast<S>();
  }

  const InterCodeConfig& config() const { return cfg_; }
  const GridBounds& bounds() const { return bounds_; }
  const TranslationScaling& scaling() const { return scaling_; }
  const Tensor& coords() const { return coords_; }
  ResidualVQ<S>& codebook() { return rvq_; }
  const ResidualVQ<S>& codebook() const { return rvq_; }
  TrajectoryEncoder<S>& encoder() { return encoder_; }
  TrajectoryDecoder<S>& decoder() { return decoder_; }
  ContactEncoder<S>& contact_encoder() { return contact_; }
  const HandLayer<S>& hand() const { return hand_; }

  // Gradient-trained parameters (codewords are EMA-updated and excluded).
  ad::ParameterList<S> parameters() {
    ad::ParameterList<S> out;
    encoder_.collect("encoder", out);
    contact_.collect("contact", out);
    decoder_.collect("decoder", out);
    return out;
  }

  ad::Var<S> encode(ad::Graph<S>& g, const Batch<S>& b) { return encoder_(g, g.constant_ref(b.encoder_input)); }

  // Decodes latents (B*T x E) with the per-step conditioning of the batch.
  typename TrajectoryDecoder<S>::Output decode(ad::Graph<S>& g, const ad::Var<S>& latent, const Batch<S>& b) {
    auto contact = encode_contact_batch(g, contact_, b.heat_steps, coords_);
    auto joint = ad::concat_cols(
        std::vector<ad::Var<S>>{latent, g.constant_ref(b.text), g.constant_ref(b.images), contact});
    auto out = decoder_(g, joint);
    return {denormalize_pose(g, out.pose, scaling_), out.contact_logits};
  }

  // Full pass. Training graphs sample codes with Gumbel noise; evaluation
  // graphs use nearest codewords.
  Forward forward(ad::Graph<S>& g, const Batch<S>& b, std::mt19937_64& rng) {
    Forward f;
    f.features = encode(g, b);
    f.quant = g.training() ? rvq_.quantize_train(f.features.value(), cfg_.rvq.gumbel_temp, rng, true)
                           : rvq_.quantize_eval(f.features.value());
    auto latent = ad::straight_through(f.features, f.quant.quantized);
    auto dec = decode(g, latent, b);
    f.pose = dec.pose;
    f.logits = dec.contact_logits;
    f.loss = interaction_loss(g, f.pose, f.logits, b.targets, hand_, cfg_.weights, cfg_.use_contact_loss);
    if (cfg_.commitment > 0.0) {
      // Each layer pulls the encoder output toward its partial reconstruction.
      std::vector<ad::Var<S>> terms;
      for (const auto& p : f.quant.partial) terms.push_back(ad::mse_mean(f.features, g.constant_ref(p)));
      auto commit = ad::weighted_sum(terms, std::vector<S>(terms.size(), S(1) / static_cast<S>(terms.size())));
      f.commitment = static_cast<double>(commit.value()(0, 0));
      f.total = ad::weighted_sum(std::vector<ad::Var<S>>{f.loss.total, commit},
                                 std::vector<S>{S(1), static_cast<S>(cfg_.commitment)});
    } else {
      f.total = f.loss.total;
    }
    return f;
  }

  // Nearest-codeword tokenization in evaluation mode.
  Quantization<S> tokenize(const Batch<S>& b) {
    ad::Graph<S> g(false, 0, false);
    return rvq_.quantize_eval(encode(g, b).value());
  }

 private:
  InterCodeConfig cfg_;
  GridBounds bounds_;
  TranslationScaling scaling_;
  TrajectoryEncoder<S> encoder_;
  ResidualVQ<S> rvq_;
  ContactEncoder<S> contact_;
  TrajectoryDecoder<S> decoder_;
  HandLayer<S> hand_;
  Tensor coords_;
};

}  // namespace intertraj

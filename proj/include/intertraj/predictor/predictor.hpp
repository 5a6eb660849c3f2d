#pragma once

// Interaction predictor variants.
//   ltf   retrieved latent + frame-0 conditioning -> decoder
//   ctf   the same decoder without the latent channel (single stage)
//   ldiff iterative denoising in the codebook latent space, then the decoder
//   cdiff iterative denoising of the trajectory parameters themselves
// Conditioning on every step: text, frame-0 image, contact feature of the
// frame-0 point and, for interpolation, the goal frame.

#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "intertraj/conditioning/contact_encoder.hpp"
#include "intertraj/codebook/encoder.hpp"
#include "intertraj/model/batch.hpp"
#include "intertraj/model/decoder.hpp"
#include "intertraj/model/loss.hpp"

namespace intertraj {

enum class PredictorVariant { Ltf, Ldiff, Ctf, Cdiff };
enum class TaskMode { Forecasting, Interpolation };

PredictorVariant parse_variant(const std::string& s);
std::string to_string(PredictorVariant v);
TaskMode parse_task_mode(const std::string& s);
std::string to_string(TaskMode m);

inline bool uses_codebook(PredictorVariant v) { return v == PredictorVariant::Ltf || v == PredictorVariant::Ldiff; }
inline bool is_diffusion(PredictorVariant v) { return v == PredictorVariant::Ldiff || v == PredictorVariant::Cdiff; }

// Diffusion state of cdiff: normalized pose | contacts mapped to [-1, 1].
inline constexpr Eigen::Index kTrajectoryStateDims = kPoseDims + kNumVertices;
inline constexpr Eigen::Index kStepEmbeddingDims = 64;

struct PredictorConfig {
  int horizon = 30;
  PredictorVariant variant = PredictorVariant::Ltf;
  TaskMode task = TaskMode::Forecasting;
  Eigen::Index latent_dims = 512;
  ad::TransformerDims decoder{512, 1024, 0.2};
  ContactEncoderDims contact;
  double sigma_voxels = 1.0;
  LossWeights weights;
  bool use_contact_loss = true;
  int diffusion_steps = 50;
  double x0_weight = 1.0;

  Eigen::Index condition_width() const {
    return kTextDims + kImageDims + contact.out + (task == TaskMode::Interpolation ? kImageDims : 0);
  }
  // Input width of the output decoder.
  Eigen::Index joint_width() const {
    return (variant == PredictorVariant::Ctf || variant == PredictorVariant::Cdiff ? 0 : latent_dims) +
           condition_width();
  }

  void validate() const {
    require(horizon >= 1, "predictor: horizon must be positive");
    require(latent_dims >= 1 && decoder.width >= 1 && decoder.ffn >= 1, "predictor: widths must be positive");
    require(diffusion_steps >= 1, "predictor: diffusion needs at least one step");
    require(x0_weight >= 0.0, "predictor: x0 weight must be non-negative");
  }
};

// Cosine schedule; alpha_bar(n) for steps n = 0..N-1, decreasing, with
// alpha_bar(N-1) ~ 0.
class CosineSchedule {
 public:
  explicit CosineSchedule(int steps = 50) : steps_(steps) {
    require(steps >= 1, "diffusion schedule: at least one step");
    const double s = 0.008;
    const auto f = [s](double u) {
      const double c = std::cos((u + s) / (1.0 + s) * M_PI / 2.0);
      return c * c;
    };
    for (int n = 0; n < steps; ++n) alpha_bar_.push_back(std::max(f(double(n + 1) / steps) / f(0.0), 1e-5));
  }

  int steps() const { return steps_; }
  double alpha_bar(int n) const {
    require(n >= 0 && n < steps_, "diffusion step out of range");
    return alpha_bar_[static_cast<std::size_t>(n)];
  }

 private:
  int steps_;
  std::vector<double> alpha_bar_;
};

// Sinusoidal embedding of the step index, one row per sequence.
template <typename S>
ad::Tensor<S> step_embedding(const std::vector<int>& steps) {
  ad::Tensor<S> out(static_cast<Eigen::Index>(steps.size()), kStepEmbeddingDims);
  const Eigen::Index half = kStepEmbeddingDims / 2;
  for (std::size_t i = 0; i < steps.size(); ++i)
    for (Eigen::Index j = 0; j < half; ++j) {
      const double freq = std::exp(-std::log(1000.0) * double(j) / double(half));
      out(static_cast<Eigen::Index>(i), j) = static_cast<S>(std::sin(steps[i] * freq));
      out(static_cast<Eigen::Index>(i), half + j) = static_cast<S>(std::cos(steps[i] * freq));
    }
  return out;
}

template <typename S>
class InterPred {
 public:
  using Tensor = ad::Tensor<S>;

  struct Output {
    ad::Var<S> pose;    // B*T x 99, meters
    ad::Var<S> logits;  // B*T x 778
    std::optional<ad::Var<S>> x0_loss;
  };

  InterPred() = default;
  InterPred(const PredictorConfig& cfg, const GridBounds& bounds, std::uint64_t seed)
      : cfg_(cfg), bounds_(bounds), scaling_(TranslationScaling::from_bounds(bounds)), schedule_(cfg.diffusion_steps) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    contact_ = ContactEncoder<S>(rng, cfg_.contact);
    const auto T = cfg_.horizon;
    if (cfg_.variant == PredictorVariant::Cdiff) {
      decoder_ = TrajectoryDecoder<S>(
          DecoderDims{kTrajectoryStateDims + cfg_.condition_width() + kStepEmbeddingDims, T, cfg_.decoder}, rng);
    } else {
      decoder_ = TrajectoryDecoder<S>(DecoderDims{cfg_.joint_width(), T, cfg_.decoder}, rng);
    }
    if (cfg_.variant == PredictorVariant::Ldiff) {
      // Noisy latent | retrieved latent | conditioning | step.
      const Eigen::Index in = 2 * cfg_.latent_dims + cfg_.condition_width() + kStepEmbeddingDims;
      denoiser_ = TrajectoryEncoder<S>(EncoderDims{in, T, cfg_.decoder}, rng);
      denoiser_out_ = ad::Linear<S>(cfg_.decoder.width, cfg_.latent_dims, rng);
    }
    coords_ = coordinate_grid(bounds_).template cast<S>();
  }

  const PredictorConfig& config() const { return cfg_; }
  const GridBounds& bounds() const { return bounds_; }
  const CosineSchedule& schedule() const { return schedule_; }
  TrajectoryDecoder<S>& decoder() { return decoder_; }
  const HandLayer<S>& hand() const { return hand_; }

  // RMS of the clean latents, set from the training data (ldiff only).
  double latent_scale() const { return latent_scale_; }
  void set_latent_scale(double s) {
    require(s > 0.0 && std::isfinite(s), "predictor: latent scale must be positive");
    latent_scale_ = s;
  }

  // B*T x condition_width. Goal features must be given exactly in
  // interpolation mode.
  ad::Var<S> condition(ad::Graph<S>& g, const Batch<S>& b, const Tensor* goal, bool trainable = true) {
    if (cfg_.task == TaskMode::Forecasting && goal)
      throw InvalidArgument("predictor: goal features are not accepted in forecasting mode");
    if (cfg_.task == TaskMode::Interpolation && !goal)
      throw InvalidArgument("predictor: interpolation mode needs goal features");
    auto contact = ad::repeat_rows(encode_contact_batch(g, contact_, b.heat0, coords_, trainable), b.horizon);
    std::vector<ad::Var<S>> parts{g.constant_ref(b.text), g.constant_ref(b.image0), contact};
    if (goal) {
      require(goal->rows() == b.text.rows() && goal->cols() == kImageDims, "predictor: goal features shape");
      parts.push_back(g.constant_ref(*goal));
    }
    return ad::concat_cols(parts);
  }

  ad::Var<S> condition(ad::Graph<S>& g, const Batch<S>& b, bool trainable = true) {
    return condition(g, b, cfg_.task == TaskMode::Interpolation ? &b.goal : nullptr, trainable);
  }

  // ltf / ctf / ldiff output decoder. latent is B*T x E, ignored for ctf.
  Output decode(ad::Graph<S>& g, const std::optional<ad::Var<S>>& latent, const ad::Var<S>& cond,
                bool trainable = true) {
    std::vector<ad::Var<S>> parts;
    if (cfg_.variant != PredictorVariant::Ctf) {
      require(latent.has_value(), "predictor: this variant needs a latent");
      parts.push_back(*latent);
    }
    parts.push_back(cond);
    auto out = decoder_(g, ad::concat_cols(parts), trainable);
    return {denormalize_pose(g, out.pose, scaling_), out.contact_logits, std::nullopt};
  }

  // Clean estimate of a noisy state at `step` (one per sequence); the state is
  // the scaled latent for ldiff and the trajectory state for cdiff.
  // For cdiff, also returns the raw decoder output through `heads`.
  ad::Var<S> denoise(ad::Graph<S>& g, const ad::Var<S>& noisy, const std::vector<int>& steps, const ad::Var<S>& cond,
                     const std::optional<ad::Var<S>>& retrieved, typename TrajectoryDecoder<S>::Output* heads = nullptr,
                     bool trainable = true) {
    require(is_diffusion(cfg_.variant), "predictor: denoise needs a diffusion variant");
    const Eigen::Index T = cfg_.horizon;
    require(noisy.rows() == cond.rows() && static_cast<Eigen::Index>(steps.size()) * T == noisy.rows(),
            "predictor: one diffusion step per sequence");
    for (int s : steps) schedule_.alpha_bar(s);
    auto step = ad::repeat_rows(g.constant(step_embedding<S>(steps)), T);
    if (cfg_.variant == PredictorVariant::Ldiff) {
      require(retrieved.has_value(), "predictor: ldiff needs the retrieved latent");
      auto x = ad::concat_cols(
          std::vector<ad::Var<S>>{noisy, ad::scale(*retrieved, S(1.0 / latent_scale_)), cond, step});
      return denoiser_out_(g, denoiser_(g, x, trainable), trainable);
    }
    auto out = decoder_(g, ad::concat_cols(std::vector<ad::Var<S>>{noisy, cond, step}), trainable);
    if (heads) *heads = out;
    return ad::concat_cols(
        std::vector<ad::Var<S>>{out.pose, ad::tanh(ad::scale(out.contact_logits, S(0.5)))});
  }

  // Clean diffusion state of a batch (cdiff).
  Tensor trajectory_state(const Batch<S>& b) const {
    Tensor x(b.encoder_input.rows(), kTrajectoryStateDims);
    x.leftCols(kPoseDims) = b.encoder_input.leftCols(kPoseDims);
    x.rightCols(kNumVertices) = (b.targets.contacts.array() * S(2) - S(1)).matrix();
    return x;
  }

  // Training pass. latent: retrieved latents (ltf, ldiff); clean: clean latent
  // targets (ldiff). Diffusion variants draw one step per sequence.
  Output forward_train(ad::Graph<S>& g, const Batch<S>& b, const Tensor* latent, const Tensor* clean,
                       std::mt19937_64& rng) {
    auto cond = condition(g, b);
    std::optional<ad::Var<S>> lat;
    if (latent) lat = g.constant_ref(*latent);
    if (!is_diffusion(cfg_.variant)) return decode(g, lat, cond);

    Tensor x0 = cfg_.variant == PredictorVariant::Ldiff
                    ? Tensor(*require_ptr(clean, "predictor: ldiff training needs clean latents") /
                             static_cast<S>(latent_scale_))
                    : trajectory_state(b);
    std::uniform_int_distribution<int> pick(0, schedule_.steps() - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<int> steps(static_cast<std::size_t>(b.size));
    for (auto& s : steps) s = pick(rng);
    Tensor noisy(x0.rows(), x0.cols());
    for (int i = 0; i < b.size; ++i) {
      const double ab = schedule_.alpha_bar(steps[static_cast<std::size_t>(i)]);
      const S a = static_cast<S>(std::sqrt(ab)), s = static_cast<S>(std::sqrt(1.0 - ab));
      for (Eigen::Index r = Eigen::Index(i) * b.horizon; r < Eigen::Index(i + 1) * b.horizon; ++r)
        for (Eigen::Index c = 0; c < x0.cols(); ++c)
          noisy(r, c) = a * x0(r, c) + s * static_cast<S>(normal(rng));
    }
    typename TrajectoryDecoder<S>::Output heads;
    auto est = denoise(g, g.constant(std::move(noisy)), steps, cond, lat, &heads);
    auto x0_loss = ad::mse_mean(est, g.constant(std::move(x0)));
    Output out;
    if (cfg_.variant == PredictorVariant::Ldiff) {
      out = decode(g, ad::scale(est, static_cast<S>(latent_scale_)), cond);
    } else {
      out = {denormalize_pose(g, heads.pose, scaling_), heads.contact_logits, std::nullopt};
    }
    out.x0_loss = x0_loss;
    return out;
  }

  // Full reverse loop from `start` (a state at step `from`), predicting the
  // clean state and re-noising it to the next lower step. Returns the final
  // clean estimate.
  Tensor reverse(ad::Graph<S>& g, Tensor state, int from, const ad::Var<S>& cond,
                 const std::optional<ad::Var<S>>& retrieved, std::mt19937_64& rng,
                 typename TrajectoryDecoder<S>::Output* heads = nullptr) {
    schedule_.alpha_bar(from);
    const int B = static_cast<int>(state.rows() / cfg_.horizon);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor est;
    for (int n = from; n >= 0; --n) {
      est = denoise(g, g.constant(state), std::vector<int>(static_cast<std::size_t>(B), n), cond, retrieved, heads,
                    false)
                .value();
      if (n == 0) break;
      const double ab = schedule_.alpha_bar(n - 1);
      const S a = static_cast<S>(std::sqrt(ab)), s = static_cast<S>(std::sqrt(1.0 - ab));
      for (Eigen::Index i = 0; i < state.size(); ++i) state.data()[i] = a * est.data()[i] + s * static_cast<S>(normal(rng));
    }
    return est;
  }

  // Inference. latent: retrieved latents for ltf / ldiff.
  Output predict(ad::Graph<S>& g, const Batch<S>& b, const Tensor* latent, std::mt19937_64& rng) {
    auto cond = condition(g, b, false);
    std::optional<ad::Var<S>> lat;
    if (latent) lat = g.constant_ref(*latent);
    if (!is_diffusion(cfg_.variant)) return decode(g, lat, cond, false);
    const Eigen::Index width = cfg_.variant == PredictorVariant::Ldiff ? cfg_.latent_dims : kTrajectoryStateDims;
    Tensor start(b.text.rows(), width);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < start.size(); ++i) start.data()[i] = static_cast<S>(normal(rng));
    typename TrajectoryDecoder<S>::Output heads;
    Tensor est = reverse(g, std::move(start), schedule_.steps() - 1, cond, lat, rng, &heads);
    if (cfg_.variant == PredictorVariant::Ldiff)
      return decode(g, g.constant(Tensor(est * static_cast<S>(latent_scale_))), cond, false);
    return {denormalize_pose(g, heads.pose, scaling_), heads.contact_logits, std::nullopt};
  }

  Output predict(ad::Graph<S>& g, const Batch<S>& b, const Tensor* latent) {
    std::mt19937_64 rng(0);
    return predict(g, b, latent, rng);
  }

  ad::ParameterList<S> parameters() {
    ad::ParameterList<S> out;
    contact_.collect("contact", out);
    decoder_.collect("decoder", out);
    if (cfg_.variant == PredictorVariant::Ldiff) {
      denoiser_.collect("denoiser", out);
      denoiser_out_.collect("denoiser.out", out);
    }
    return out;
  }

  void collect_contact_head(ad::ParameterList<S>& out) { decoder_.collect_contact_head("decoder", out); }

 private:
  static const Tensor* require_ptr(const Tensor* p, const char* what) {
    require(p != nullptr, what);
    return p;
  }

  PredictorConfig cfg_;
  GridBounds bounds_;
  TranslationScaling scaling_;
  CosineSchedule schedule_;
  ContactEncoder<S> contact_;
  TrajectoryDecoder<S> decoder_;
  TrajectoryEncoder<S> denoiser_;
  ad::Linear<S> denoiser_out_;
  HandLayer<S> hand_;
  Tensor coords_;
  double latent_scale_ = 1.0;
};

}  // namespace intertraj

#pragma once

#include <optional>
#include <vector>

#include "intertraj/codebook/train.hpp"
#include "intertraj/predictor/predictor.hpp"

namespace intertraj {

using PredictorModel = InterPred<Real>;

// Per-sample latents (T x E) fed to the predictor. `retrieved` comes from the
// indexer (ltf, ldiff); `clean` is the codebook reconstruction target (ldiff).
struct PredictorLatents {
  std::vector<ad::Tensor<Real>> retrieved;
  std::vector<ad::Tensor<Real>> clean;
};

// Codebook latents (sum of the nearest codewords) per sample.
std::vector<ad::Tensor<Real>> clean_latents(InterCodeModel& codebook, const std::vector<SequenceSample>& samples,
                                            int batch = 32);

// Five-term loss on the predicted trajectory, plus the weighted L2 on the
// denoised estimate for the diffusion variants. Sets the latent scale of
// ldiff from the clean latents.
std::vector<EpochRecord> train_predictor(PredictorModel& model, const std::vector<SequenceSample>& samples,
                                         const PredictorLatents& latents, const TrainOptions& opts);

// Evaluation-mode predictions; `seed` drives the diffusion noise.
std::vector<SequencePrediction> predict_all(PredictorModel& model, const std::vector<SequenceSample>& samples,
                                            const PredictorLatents& latents, std::uint64_t seed, int batch = 32);

}  // namespace intertraj

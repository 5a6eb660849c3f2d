#pragma once

#include <vector>

#include "intertraj/codebook/intercode.hpp"
#include "intertraj/model/evaluation.hpp"
#include "intertraj/model/training.hpp"

namespace intertraj {

using InterCodeModel = InterCode<Real>;

// k-means++ codebook seeding from the encoder outputs of `samples`.
void initialize_codebook(InterCodeModel& model, const std::vector<SequenceSample>& samples, std::mt19937_64& rng);

// Adam on the gradient-trained parameters, EMA on the codewords after every
// step. Seeds the codebook first when it is not initialized. Throws
// TrainingDiverged on a non-finite loss.
std::vector<EpochRecord> train_codebook(InterCodeModel& model, const std::vector<SequenceSample>& samples,
                                        const TrainOptions& opts);

// Evaluation-mode reconstruction through nearest codewords.
std::vector<SequencePrediction> reconstruct(InterCodeModel& model, const std::vector<SequenceSample>& samples,
                                            int batch = 32);

// Nearest-codeword indices (T x Q) per sample.
std::vector<Eigen::MatrixXi> tokenize(InterCodeModel& model, const std::vector<SequenceSample>& samples,
                                      int batch = 32);

// Helpers shared by the later stages.
std::vector<const SequenceSample*> pointers(const std::vector<SequenceSample>& samples,
                                            const std::vector<std::size_t>& idx);
SequencePrediction to_prediction(const SequenceSample& s, const ad::Tensor<Real>& pose, const ad::Tensor<Real>& logits,
                                 Eigen::Index row0);

}  // namespace intertraj

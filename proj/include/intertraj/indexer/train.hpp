#pragma once

#include <vector>

#include "intertraj/codebook/train.hpp"
#include "intertraj/indexer/indexer.hpp"

namespace intertraj {

using IndexerModel = Indexer<Real>;

struct IndexAccuracy {
  double top1 = 0.0;
  double top5 = 0.0;
};

// Cross-entropy against the nearest-codeword indices of the frozen codebook.
// Throws InvalidArgument when the codebook has not been trained.
std::vector<EpochRecord> train_indexer(IndexerModel& indexer, InterCodeModel& codebook,
                                       const std::vector<SequenceSample>& samples, const TrainOptions& opts);

// Share of (sequence, step, layer) slots whose target is the argmax / in the top 5.
IndexAccuracy index_accuracy(IndexerModel& indexer, const std::vector<SequenceSample>& samples,
                             const std::vector<Eigen::MatrixXi>& targets, int batch = 32);

// Retrieved latents (T x E) per sample; optionally the chosen indices too.
std::vector<ad::Tensor<Real>> retrieve_latents(IndexerModel& indexer, const ResidualVQ<Real>& codebook,
                                               const std::vector<SequenceSample>& samples, RetrievalMode mode,
                                               std::uint64_t seed, std::vector<Eigen::MatrixXi>* indices = nullptr,
                                               int batch = 32);

// Evaluation-mode logits (T x Q*K) per sample.
std::vector<ad::Tensor<Real>> index_logits(IndexerModel& indexer, const std::vector<SequenceSample>& samples,
                                           int batch = 32);

}  // namespace intertraj

#include "intertraj/indexer/train.hpp"

#include <algorithm>
#include <cstdio>

namespace intertraj {

RetrievalMode parse_retrieval_mode(const std::string& s) {
  if (s == "argmax") return RetrievalMode::Argmax;
  if (s == "sample") return RetrievalMode::Sample;
  throw InvalidArgument("unknown retrieval mode '" + s + "' (expected argmax or sample)");
}

namespace {

Eigen::MatrixXi stack_targets(const std::vector<Eigen::MatrixXi>& targets, const std::vector<std::size_t>& idx) {
  const Eigen::Index T = targets.at(idx.front()).rows();
  Eigen::MatrixXi out(Eigen::Index(idx.size()) * T, targets.at(idx.front()).cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.middleRows(Eigen::Index(i) * T, T) = targets.at(idx[i]);
  return out;
}

}  // namespace

std::vector<ad::Tensor<Real>> index_logits(IndexerModel& indexer, const std::vector<SequenceSample>& samples,
                                           int batch) {
  std::vector<ad::Tensor<Real>> out;
  std::mt19937_64 unused(0);
  for (const auto& idx : make_batches(samples.size(), static_cast<std::size_t>(batch), unused, false)) {
    const auto ptrs = pointers(samples, idx);
    const auto b = make_batch<Real>(ptrs, indexer.bounds(), indexer.config().sigma_voxels);
    ad::Graph<Real> g(false, 0, false);
    const ad::Tensor<Real> logits = indexer.logits(g, b, false).value();
    for (std::size_t i = 0; i < ptrs.size(); ++i)
      out.push_back(logits.middleRows(Eigen::Index(i) * b.horizon, b.horizon));
  }
  return out;
}

IndexAccuracy index_accuracy(IndexerModel& indexer, const std::vector<SequenceSample>& samples,
                             const std::vector<Eigen::MatrixXi>& targets, int batch) {
  require(samples.size() == targets.size(), "index_accuracy: one target matrix per sample");
  const int Q = indexer.config().Q, K = indexer.config().K;
  const auto logits = index_logits(indexer, samples, batch);
  double top1 = 0, top5 = 0, slots = 0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto p = index_probabilities(logits[s], Q, K);
    for (Eigen::Index r = 0; r < targets[s].rows(); ++r)
      for (int q = 0; q < Q; ++q) {
        const auto row = p.row(r * Q + q);
        const Real v = row(targets[s](r, q));
        int better = 0;
        for (int k = 0; k < K; ++k) better += row(k) > v ? 1 : 0;
        top1 += better == 0 ? 1 : 0;
        top5 += better < 5 ? 1 : 0;
        slots += 1;
      }
  }
  return {top1 / std::max(slots, 1.0), top5 / std::max(slots, 1.0)};
}

std::vector<EpochRecord> train_indexer(IndexerModel& indexer, InterCodeModel& codebook,
                                       const std::vector<SequenceSample>& samples, const TrainOptions& opts) {
  require(!samples.empty(), "train_indexer: empty training split");
  require(codebook.codebook().initialized(), "train_indexer: the codebook has not been trained");
  require(codebook.config().rvq.K == indexer.config().K && codebook.config().rvq.Q == indexer.config().Q,
          "train_indexer: indexer K/Q do not match the codebook");
  const auto targets = tokenize(codebook, samples);
  std::mt19937_64 rng(opts.seed);
  auto params = indexer.parameters();
  ad::Adam<Real> adam(params, ad::AdamOptions{opts.lr});
  TrainingLog log(opts.log_path, "indexer", "top1");
  std::vector<EpochRecord> history;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    adam.set_lr(scheduled_lr(opts, epoch));
    const auto t0 = std::chrono::steady_clock::now();
    EpochAccumulator acc;
    for (const auto& idx : make_batches(samples.size(), static_cast<std::size_t>(opts.batch), rng)) {
      const auto b = make_batch<Real>(pointers(samples, idx), indexer.bounds(), indexer.config().sigma_voxels);
      const Eigen::MatrixXi tgt = stack_targets(targets, idx);
      ad::zero_grad(params);
      ad::Graph<Real> g(true, rng());
      auto logits = indexer.logits(g, b);
      auto loss = indexer.loss(logits, tgt);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) throw TrainingDiverged("indexer loss became non-finite in epoch " + std::to_string(epoch));
      g.backward(loss);
      const double gn = ad::clip_grad_norm(params, opts.clip);
      adam.step();
      // Training-batch top-1 (dropout on).
      const auto picked =
          select_indices(logits.value(), indexer.config().Q, indexer.config().K, RetrievalMode::Argmax, rng);
      const double top1 = (picked.array() == tgt.array()).cast<double>().mean();
      std::array<double, kNumLossTerms> terms{};
      acc.add(value, terms, top1, gn);
    }
    history.push_back(acc.finish(epoch, seconds_since(t0)));
    log.write(history.back());
    if (opts.verbose)
      std::fprintf(stderr, "[indexer] epoch %d loss %.5f top1 %.3f (%.2fs)\n", epoch, history.back().loss,
                   history.back().extra, history.back().seconds);
    if (opts.target_loss > 0.0 && history.back().loss < opts.target_loss) break;
  }
  return history;
}

std::vector<ad::Tensor<Real>> retrieve_latents(IndexerModel& indexer, const ResidualVQ<Real>& codebook,
                                               const std::vector<SequenceSample>& samples, RetrievalMode mode,
                                               std::uint64_t seed, std::vector<Eigen::MatrixXi>* indices, int batch) {
  std::mt19937_64 rng(seed);
  std::vector<ad::Tensor<Real>> out;
  if (indices) indices->clear();
  for (const auto& logits : index_logits(indexer, samples, batch)) {
    Eigen::MatrixXi idx;
    out.push_back(retrieve(logits, codebook, mode, rng, &idx));
    if (indices) indices->push_back(std::move(idx));
  }
  return out;
}

}  // namespace intertraj

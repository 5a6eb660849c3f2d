#include "intertraj/codebook/train.hpp"

#include <cstdio>
#include <numeric>

namespace intertraj {

std::vector<const SequenceSample*> pointers(const std::vector<SequenceSample>& samples,
                                            const std::vector<std::size_t>& idx) {
  std::vector<const SequenceSample*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&samples.at(i));
  return out;
}

SequencePrediction to_prediction(const SequenceSample& s, const ad::Tensor<Real>& pose, const ad::Tensor<Real>& logits,
                                 Eigen::Index row0) {
  SequencePrediction p;
  p.id = s.id;
  p.pose = pose.middleRows(row0, s.horizon).cast<double>();
  p.contact_prob = ad::sigmoid_value<double>(ad::Tensor<double>(logits.middleRows(row0, s.horizon).cast<double>()));
  return p;
}

namespace {

std::vector<std::vector<std::size_t>> ordered_batches(std::size_t n, int batch) {
  std::mt19937_64 unused(0);
  return make_batches(n, static_cast<std::size_t>(batch), unused, false);
}

}  // namespace

void initialize_codebook(InterCodeModel& model, const std::vector<SequenceSample>& samples, std::mt19937_64& rng) {
  require(!samples.empty(), "codebook initialization needs samples");
  std::vector<ad::Tensor<Real>> parts;
  Eigen::Index rows = 0;
  for (const auto& idx : ordered_batches(samples.size(), 32)) {
    const auto b = make_batch<Real>(pointers(samples, idx), model.bounds(), model.config().sigma_voxels);
    ad::Graph<Real> g(false, 0, false);
    parts.push_back(model.encode(g, b).value());
    rows += parts.back().rows();
  }
  ad::Tensor<Real> all(rows, model.config().rvq.E);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    all.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  model.codebook().initialize(all, rng);
}

std::vector<EpochRecord> train_codebook(InterCodeModel& model, const std::vector<SequenceSample>& samples,
                                        const TrainOptions& opts) {
  require(!samples.empty(), "train_codebook: empty training split");
  std::mt19937_64 rng(opts.seed);
  if (!model.codebook().initialized()) initialize_codebook(model, samples, rng);
  auto params = model.parameters();
  ad::Adam<Real> adam(params, ad::AdamOptions{opts.lr});
  TrainingLog log(opts.log_path, "codebook", "commitment");
  std::vector<EpochRecord> history;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    adam.set_lr(scheduled_lr(opts, epoch));
    const auto t0 = std::chrono::steady_clock::now();
    EpochAccumulator acc;
    for (const auto& idx : make_batches(samples.size(), static_cast<std::size_t>(opts.batch), rng)) {
      const auto b = make_batch<Real>(pointers(samples, idx), model.bounds(), model.config().sigma_voxels);
      ad::zero_grad(params);
      ad::Graph<Real> g(true, rng());
      auto f = model.forward(g, b, rng);
      const double loss = f.total.value()(0, 0);
      if (!std::isfinite(loss)) throw TrainingDiverged("codebook loss became non-finite in epoch " + std::to_string(epoch));
      g.backward(f.total);
      const double gn = ad::clip_grad_norm(params, opts.clip);
      adam.step();
      model.codebook().ema_update(f.quant.residuals, f.quant.indices, rng);
      acc.add(loss, f.loss.terms, f.commitment, gn);
    }
    history.push_back(acc.finish(epoch, seconds_since(t0)));
    log.write(history.back());
    if (opts.verbose)
      std::fprintf(stderr, "[codebook] epoch %d loss %.5f (%.2fs)\n", epoch, history.back().loss,
                   history.back().seconds);
    if (opts.target_loss > 0.0 && history.back().loss < opts.target_loss) break;
  }
  model.codebook().mark_initialized();
  return history;
}

std::vector<SequencePrediction> reconstruct(InterCodeModel& model, const std::vector<SequenceSample>& samples,
                                            int batch) {
  std::vector<SequencePrediction> out;
  std::mt19937_64 rng(0);
  for (const auto& idx : ordered_batches(samples.size(), batch)) {
    const auto ptrs = pointers(samples, idx);
    const auto b = make_batch<Real>(ptrs, model.bounds(), model.config().sigma_voxels);
    ad::Graph<Real> g(false, 0, false);
    auto f = model.forward(g, b, rng);
    for (std::size_t i = 0; i < ptrs.size(); ++i)
      out.push_back(to_prediction(*ptrs[i], f.pose.value(), f.logits.value(),
                                  static_cast<Eigen::Index>(i) * b.horizon));
  }
  return out;
}

std::vector<Eigen::MatrixXi> tokenize(InterCodeModel& model, const std::vector<SequenceSample>& samples, int batch) {
  std::vector<Eigen::MatrixXi> out;
  for (const auto& idx : ordered_batches(samples.size(), batch)) {
    const auto ptrs = pointers(samples, idx);
    const auto b = make_batch<Real>(ptrs, model.bounds(), model.config().sigma_voxels);
    const auto q = model.tokenize(b);
    for (std::size_t i = 0; i < ptrs.size(); ++i)
      out.push_back(q.indices.middleRows(static_cast<Eigen::Index>(i) * b.horizon, b.horizon));
  }
  return out;
}

}  // namespace intertraj

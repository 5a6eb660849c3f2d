#include "intertraj/predictor/train.hpp"

#include <cstdio>

namespace intertraj {

PredictorVariant parse_variant(const std::string& s) {
  if (s == "ltf") return PredictorVariant::Ltf;
  if (s == "ldiff") return PredictorVariant::Ldiff;
  if (s == "ctf") return PredictorVariant::Ctf;
  if (s == "cdiff") return PredictorVariant::Cdiff;
  throw InvalidArgument("unknown variant '" + s + "' (expected ltf, ldiff, ctf or cdiff)");
}

std::string to_string(PredictorVariant v) {
  switch (v) {
    case PredictorVariant::Ltf: return "ltf";
    case PredictorVariant::Ldiff: return "ldiff";
    case PredictorVariant::Ctf: return "ctf";
    case PredictorVariant::Cdiff: return "cdiff";
  }
  return "?";
}

TaskMode parse_task_mode(const std::string& s) {
  if (s == "forecasting") return TaskMode::Forecasting;
  if (s == "interpolation") return TaskMode::Interpolation;
  throw InvalidArgument("unknown task mode '" + s + "' (expected forecasting or interpolation)");
}

std::string to_string(TaskMode m) { return m == TaskMode::Forecasting ? "forecasting" : "interpolation"; }

namespace {

// Stacks per-sample T x E blocks for a batch; null when the list is empty.
std::optional<ad::Tensor<Real>> stack(const std::vector<ad::Tensor<Real>>& per_sample,
                                      const std::vector<std::size_t>& idx) {
  if (per_sample.empty()) return std::nullopt;
  const Eigen::Index T = per_sample.at(idx.front()).rows();
  ad::Tensor<Real> out(Eigen::Index(idx.size()) * T, per_sample.at(idx.front()).cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.middleRows(Eigen::Index(i) * T, T) = per_sample.at(idx[i]);
  return out;
}

void check_latents(const PredictorModel& model, const std::vector<SequenceSample>& samples,
                   const PredictorLatents& latents) {
  const auto v = model.config().variant;
  if (uses_codebook(v)) {
    require(latents.retrieved.size() == samples.size(), "predictor: one retrieved latent per sample is required");
    for (const auto& l : latents.retrieved)
      require(l.cols() == model.config().latent_dims, "predictor: retrieved latent width does not match the model");
  }
}

}  // namespace

std::vector<ad::Tensor<Real>> clean_latents(InterCodeModel& codebook, const std::vector<SequenceSample>& samples,
                                            int batch) {
  std::vector<ad::Tensor<Real>> out;
  for (const auto& idx : tokenize(codebook, samples, batch)) out.push_back(codebook.codebook().lookup(idx));
  return out;
}

std::vector<EpochRecord> train_predictor(PredictorModel& model, const std::vector<SequenceSample>& samples,
                                         const PredictorLatents& latents, const TrainOptions& opts) {
  require(!samples.empty(), "train_predictor: empty training split");
  check_latents(model, samples, latents);
  const auto v = model.config().variant;
  if (v == PredictorVariant::Ldiff) {
    require(latents.clean.size() == samples.size(), "predictor: ldiff needs one clean latent per sample");
    double sq = 0, n = 0;
    for (const auto& l : latents.clean) {
      sq += l.cast<double>().squaredNorm();
      n += static_cast<double>(l.size());
    }
    model.set_latent_scale(std::sqrt(sq / std::max(n, 1.0)) + 1e-8);
  }
  std::mt19937_64 rng(opts.seed);
  auto params = model.parameters();
  ad::Adam<Real> adam(params, ad::AdamOptions{opts.lr});
  TrainingLog log(opts.log_path, "predictor", "x0_mse");
  const auto& cfg = model.config();
  std::vector<EpochRecord> history;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    adam.set_lr(scheduled_lr(opts, epoch));
    const auto t0 = std::chrono::steady_clock::now();
    EpochAccumulator acc;
    for (const auto& idx : make_batches(samples.size(), static_cast<std::size_t>(opts.batch), rng)) {
      const auto b = make_batch<Real>(pointers(samples, idx), model.bounds(), cfg.sigma_voxels);
      const auto retrieved = uses_codebook(v) ? stack(latents.retrieved, idx) : std::nullopt;
      const auto clean = v == PredictorVariant::Ldiff ? stack(latents.clean, idx) : std::nullopt;
      ad::zero_grad(params);
      ad::Graph<Real> g(true, rng());
      auto out = model.forward_train(g, b, retrieved ? &*retrieved : nullptr, clean ? &*clean : nullptr, rng);
      auto loss = interaction_loss(g, out.pose, out.logits, b.targets, model.hand(), cfg.weights, cfg.use_contact_loss);
      ad::Var<Real> total = loss.total;
      double x0 = 0.0;
      if (out.x0_loss) {
        x0 = out.x0_loss->value()(0, 0);
        total = ad::weighted_sum(std::vector<ad::Var<Real>>{loss.total, *out.x0_loss},
                                 std::vector<Real>{Real(1), static_cast<Real>(cfg.x0_weight)});
      }
      const double value = total.value()(0, 0);
      if (!std::isfinite(value))
        throw TrainingDiverged("predictor loss became non-finite in epoch " + std::to_string(epoch));
      g.backward(total);
      const double gn = ad::clip_grad_norm(params, opts.clip);
      adam.step();
      acc.add(value, loss.terms, x0, gn);
    }
    history.push_back(acc.finish(epoch, seconds_since(t0)));
    log.write(history.back());
    if (opts.verbose)
      std::fprintf(stderr, "[predictor] epoch %d loss %.5f (%.2fs)\n", epoch, history.back().loss,
                   history.back().seconds);
    if (opts.target_loss > 0.0 && history.back().loss < opts.target_loss) break;
  }
  return history;
}

std::vector<SequencePrediction> predict_all(PredictorModel& model, const std::vector<SequenceSample>& samples,
                                            const PredictorLatents& latents, std::uint64_t seed, int batch) {
  check_latents(model, samples, latents);
  std::mt19937_64 rng(seed);
  std::vector<SequencePrediction> out;
  std::mt19937_64 unused(0);
  for (const auto& idx : make_batches(samples.size(), static_cast<std::size_t>(batch), unused, false)) {
    const auto ptrs = pointers(samples, idx);
    const auto b = make_batch<Real>(ptrs, model.bounds(), model.config().sigma_voxels);
    const auto retrieved = uses_codebook(model.config().variant) ? stack(latents.retrieved, idx) : std::nullopt;
    ad::Graph<Real> g(false, 0, false);
    auto res = model.predict(g, b, retrieved ? &*retrieved : nullptr, rng);
    for (std::size_t i = 0; i < ptrs.size(); ++i)
      out.push_back(to_prediction(*ptrs[i], res.pose.value(), res.logits.value(), Eigen::Index(i) * b.horizon));
  }
  return out;
}

}  // namespace intertraj

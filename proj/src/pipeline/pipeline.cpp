#include "intertraj/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace intertraj {

Providers make_providers(const Settings& s) {
  return {make_text_embedder(s.text_provider, s.provider_seed), make_image_embedder(s.image_provider, s.provider_seed)};
}

std::vector<SequenceSample> build_samples(const Settings& s, const Providers& p, const GridBounds& bounds,
                                          const TrajectorySet& set, const std::vector<SceneRecord>& scenes) {
  SampleBuilder builder(bounds, *p.text, *p.image, s.samples);
  return builder.build_all(set, scenes);
}

std::unique_ptr<InterCodeModel> fit_codebook(const Settings& s, const GridBounds& bounds,
                                             const std::vector<SequenceSample>& train,
                                             std::vector<EpochRecord>* history) {
  auto model = std::make_unique<InterCodeModel>(s.codebook, bounds, s.seed);
  auto h = train_codebook(*model, train, s.train_codebook);
  if (history) *history = std::move(h);
  return model;
}

std::unique_ptr<IndexerModel> fit_indexer(const Settings& s, InterCodeModel& codebook,
                                          const std::vector<SequenceSample>& train,
                                          std::vector<EpochRecord>* history) {
  auto model = std::make_unique<IndexerModel>(s.indexer, codebook.bounds(), s.seed + 11);
  auto h = train_indexer(*model, codebook, train, s.train_indexer);
  if (history) *history = std::move(h);
  return model;
}

PredictorLatents predictor_latents(const Settings& s, InterCodeModel* codebook, IndexerModel* indexer,
                                   const std::vector<SequenceSample>& samples, bool training) {
  PredictorLatents out;
  if (!uses_codebook(s.predictor.variant)) return out;
  if (!codebook || !indexer)
    throw MissingArtifact("variant " + to_string(s.predictor.variant) + " needs a trained codebook and indexer");
  const RetrievalMode mode = training ? RetrievalMode::Argmax : s.retrieval;
  out.retrieved = retrieve_latents(*indexer, codebook->codebook(), samples, mode, s.eval_seed);
  if (training && s.predictor.variant == PredictorVariant::Ldiff) out.clean = clean_latents(*codebook, samples);
  return out;
}

std::unique_ptr<PredictorModel> fit_predictor(const Settings& s, const GridBounds& bounds, InterCodeModel* codebook,
                                              IndexerModel* indexer, const std::vector<SequenceSample>& train,
                                              std::vector<EpochRecord>* history) {
  auto model = std::make_unique<PredictorModel>(s.predictor, bounds, s.seed + 23);
  const auto latents = predictor_latents(s, codebook, indexer, train, true);
  auto h = train_predictor(*model, train, latents, s.train_predictor);
  if (history) *history = std::move(h);
  return model;
}

TrainedModels train_all(const Settings& s, const GridBounds& bounds, const std::vector<SequenceSample>& train) {
  TrainedModels m;
  if (uses_codebook(s.predictor.variant)) {
    m.codebook = fit_codebook(s, bounds, train, &m.codebook_history);
    m.indexer = fit_indexer(s, *m.codebook, train, &m.indexer_history);
  }
  m.predictor = fit_predictor(s, bounds, m.codebook.get(), m.indexer.get(), train, &m.predictor_history);
  return m;
}

std::vector<SequencePrediction> predict(const Settings& s, TrainedModels& m, const std::vector<SequenceSample>& eval) {
  require(m.predictor != nullptr, "predict: no trained predictor");
  const auto latents = predictor_latents(s, m.codebook.get(), m.indexer.get(), eval, false);
  return predict_all(*m.predictor, eval, latents, s.eval_seed);
}

MetricsSummary evaluate_predictions(const Settings& s, const std::vector<SequencePrediction>& preds,
                                    const std::vector<SequenceSample>& eval) {
  return summarize(preds, eval, s.threshold, s.f1_average);
}

const TrajectorySet& SplitData::eval_set(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw InvalidArgument("unknown split '" + name + "'");
}

const std::vector<SceneRecord>& SplitData::eval_scenes(const std::string& name) const {
  if (name == "train") return train_scenes;
  if (name == "val") return val_scenes;
  if (name == "test") return test_scenes;
  throw InvalidArgument("unknown split '" + name + "'");
}

SplitData apply_split(const SyntheticDataset& ds, const SplitSpec& split) {
  SplitData d;
  d.train = select(ds.trajectories, split.train);
  d.val = select(ds.trajectories, split.val);
  d.test = select(ds.trajectories, split.test);
  d.train_scenes = select(ds.scenes, split.train);
  d.val_scenes = select(ds.scenes, split.val);
  d.test_scenes = select(ds.scenes, split.test);
  return d;
}

std::vector<std::size_t> training_subset(std::size_t n, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, "training fraction must lie in (0, 1]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * double(n))));
  idx.resize(std::min(k, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Settings with_seed(Settings s, std::uint64_t seed) {
  s.seed = seed;
  s.train_codebook.seed = seed;
  s.train_indexer.seed = seed + 1;
  s.train_predictor.seed = seed + 2;
  return s;
}

std::vector<SweepRecord> scale_sweep(const Settings& s, const GridBounds& bounds,
                                     const std::vector<SequenceSample>& train, const std::vector<SequenceSample>& eval,
                                     const std::function<void(const SweepRecord&)>& on_record) {
  std::vector<SweepRecord> out;
  for (std::uint64_t seed : s.sweep_seeds)
    for (double fraction : s.sweep_fractions) {
      const Settings run = with_seed(s, seed);
      std::vector<SequenceSample> subset;
      for (std::size_t i : training_subset(train.size(), fraction, seed)) subset.push_back(train[i]);
      TrainedModels m = train_all(run, bounds, subset);
      SweepRecord r;
      r.fraction = fraction;
      r.seed = seed;
      r.train_sequences = static_cast<int>(subset.size());
      r.metrics = evaluate_predictions(run, predict(run, m, eval), eval);
      if (on_record) on_record(r);
      out.push_back(r);
    }
  return out;
}

}  // namespace intertraj

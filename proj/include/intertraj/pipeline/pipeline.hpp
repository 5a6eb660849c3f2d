#pragma once

// In-memory three-stage pipeline: codebook -> indexer -> predictor, and
// evaluation of the resulting predictions. The CLI and the acceptance runs
// drive these functions.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "intertraj/pipeline/settings.hpp"
#include "intertraj/indexer/train.hpp"
#include "intertraj/predictor/train.hpp"

namespace intertraj {

struct Providers {
  std::unique_ptr<TextEmbedder> text;
  std::unique_ptr<ImageEmbedder> image;
};

Providers make_providers(const Settings& s);

// Samples for a subset of trajectories with the given bounds.
std::vector<SequenceSample> build_samples(const Settings& s, const Providers& p, const GridBounds& bounds,
                                          const TrajectorySet& set, const std::vector<SceneRecord>& scenes);

struct TrainedModels {
  std::unique_ptr<InterCodeModel> codebook;  // null for single-stage variants
  std::unique_ptr<IndexerModel> indexer;
  std::unique_ptr<PredictorModel> predictor;
  std::vector<EpochRecord> codebook_history, indexer_history, predictor_history;
};

std::unique_ptr<InterCodeModel> fit_codebook(const Settings& s, const GridBounds& bounds,
                                             const std::vector<SequenceSample>& train,
                                             std::vector<EpochRecord>* history = nullptr);
std::unique_ptr<IndexerModel> fit_indexer(const Settings& s, InterCodeModel& codebook,
                                          const std::vector<SequenceSample>& train,
                                          std::vector<EpochRecord>* history = nullptr);

// Latents the predictor consumes on `samples`. Training uses argmax
// retrieval; evaluation uses the configured retrieval mode. Clean latents are
// only computed for ldiff training.
PredictorLatents predictor_latents(const Settings& s, InterCodeModel* codebook, IndexerModel* indexer,
                                   const std::vector<SequenceSample>& samples, bool training);

std::unique_ptr<PredictorModel> fit_predictor(const Settings& s, const GridBounds& bounds, InterCodeModel* codebook,
                                              IndexerModel* indexer, const std::vector<SequenceSample>& train,
                                              std::vector<EpochRecord>* history = nullptr);

// All stages the configured variant needs.
TrainedModels train_all(const Settings& s, const GridBounds& bounds, const std::vector<SequenceSample>& train);

std::vector<SequencePrediction> predict(const Settings& s, TrainedModels& m, const std::vector<SequenceSample>& eval);

MetricsSummary evaluate_predictions(const Settings& s, const std::vector<SequencePrediction>& preds,
                                    const std::vector<SequenceSample>& eval);

// Train/val/test trajectories of a split.
struct SplitData {
  TrajectorySet train, val, test;
  std::vector<SceneRecord> train_scenes, val_scenes, test_scenes;

  const TrajectorySet& eval_set(const std::string& name) const;
  const std::vector<SceneRecord>& eval_scenes(const std::string& name) const;
};

SplitData apply_split(const SyntheticDataset& ds, const SplitSpec& split);

// First round(fraction * n) training sequences after a seeded shuffle
// (at least one).
std::vector<std::size_t> training_subset(std::size_t n, double fraction, std::uint64_t seed);

// Copy of `s` with the model seed and the three training streams derived
// from `seed`, as settings_from does.
Settings with_seed(Settings s, std::uint64_t seed);

struct SweepRecord {
  double fraction = 0.0;
  std::uint64_t seed = 0;
  int train_sequences = 0;
  MetricsSummary metrics;
};

// Retrains the configured variant on seeded subsets of `train` for every
// (seed, fraction) of the settings and evaluates on `eval`. The grid bounds
// stay fixed across fractions.
std::vector<SweepRecord> scale_sweep(const Settings& s, const GridBounds& bounds,
                                     const std::vector<SequenceSample>& train, const std::vector<SequenceSample>& eval,
                                     const std::function<void(const SweepRecord&)>& on_record = {});

}  // namespace intertraj

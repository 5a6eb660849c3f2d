#pragma once

// Typed view of a Config for every stage of the pipeline.

#include <string>
#include <vector>

#include "intertraj/codebook/intercode.hpp"
#include "intertraj/core/config.hpp"
#include "intertraj/indexer/indexer.hpp"
#include "intertraj/metrics/metrics.hpp"
#include "intertraj/model/training.hpp"
#include "intertraj/predictor/predictor.hpp"
#include "intertraj/synth/dataset.hpp"

namespace intertraj {

struct Settings {
  std::uint64_t seed = 0;
  DatasetConfig data;
  SplitMode split_mode = SplitMode::Task;
  std::uint64_t split_seed = 0;
  SampleOptions samples;
  std::string text_provider, image_provider;
  std::uint64_t provider_seed = 0;
  InterCodeConfig codebook;
  IndexerConfig indexer;
  PredictorConfig predictor;
  TrainOptions train_codebook, train_indexer, train_predictor;
  RetrievalMode retrieval = RetrievalMode::Argmax;
  std::string eval_split = "test";
  std::uint64_t eval_seed = 0;
  double threshold = 0.5;
  F1Average f1_average = F1Average::Micro;
  std::vector<double> sweep_fractions;
  std::vector<std::uint64_t> sweep_seeds;
  int viz_sequence = 0;
  double viz_alt_yaw_deg = 60.0;
  std::string output_dir;
};

// Throws InvalidArgument on values outside their domain.
Settings settings_from(const Config& cfg);

}  // namespace intertraj

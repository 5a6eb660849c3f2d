#pragma once

// Trained-model artifacts. Each checkpoint stores the canonical config text it
// was built from (meta "config"), its kind, the grid bounds and all weights, so
// a model can be rebuilt from the file alone.

#include <memory>
#include <string>

#include "intertraj/core/checkpoint.hpp"
#include "intertraj/core/config.hpp"
#include "intertraj/indexer/train.hpp"
#include "intertraj/predictor/train.hpp"

namespace intertraj {

void save_codebook(const std::string& path, InterCodeModel& model, const Config& cfg);
std::unique_ptr<InterCodeModel> load_codebook(const std::string& path, Config* cfg = nullptr);

void save_indexer(const std::string& path, IndexerModel& model, const Config& cfg);
std::unique_ptr<IndexerModel> load_indexer(const std::string& path, Config* cfg = nullptr);

void save_predictor(const std::string& path, PredictorModel& model, const Config& cfg);
std::unique_ptr<PredictorModel> load_predictor(const std::string& path, Config* cfg = nullptr);

// Prediction dump: kind "predictions", meta "ids" (newline separated), and
// per sequence "<id>.pose" (T x 99) and "<id>.contact_prob" (T x 778).
void save_predictions(const std::string& path, const std::vector<SequencePrediction>& preds, const Config& cfg);
std::vector<SequencePrediction> load_predictions(const std::string& path);

// FNV-1a 64 of the file contents as 16 hex digits.
std::string file_hash(const std::string& path);

}  // namespace intertraj

#include "intertraj/model/training.hpp"

#include <json.hpp>

namespace intertraj {

TrainingLog::TrainingLog(const std::string& path, std::string stage, std::string extra_name)
    : stage_(std::move(stage)), extra_name_(std::move(extra_name)) {
  if (path.empty()) return;
  out_.open(path, std::ios::app);
  if (!out_) throw Error("cannot open training log " + path);
}

void TrainingLog::write(const EpochRecord& r) {
  if (!out_.is_open()) return;
  nlohmann::json j;
  j["stage"] = stage_;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  for (int i = 0; i < kNumLossTerms; ++i) j["terms"][loss_term_name(i)] = r.terms[i];
  if (!extra_name_.empty()) j[extra_name_] = r.extra;
  j["grad_norm"] = r.grad_norm;
  j["steps"] = r.steps;
  j["seconds"] = r.seconds;
  out_ << j.dump() << "\n";
  out_.flush();
}

}  // namespace intertraj

#pragma once

// Shared training-loop plumbing: options, per-epoch records, JSONL logs and
// divergence checks.

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "intertraj/ad/optim.hpp"
#include "intertraj/model/loss.hpp"

namespace intertraj {

// Trained models run in single precision; tests instantiate the templates in double.
using Real = float;

struct TrainOptions {
  int epochs = 200;
  int batch = 32;
  double lr = 1e-4;
  double clip = 1.0;
  std::uint64_t seed = 0;
  std::string log_path;  // JSONL, one record per epoch; empty disables
  bool verbose = false;
  // Stop early once the epoch mean of the total loss falls below this value.
  double target_loss = 0.0;
  // Cosine decay from lr to lr_floor * lr over the epochs; off by default.
  bool cosine = false;
  double lr_floor = 0.01;
};

inline double scheduled_lr(const TrainOptions& o, int epoch) {
  if (!o.cosine || o.epochs <= 1) return o.lr;
  const double u = double(epoch) / double(o.epochs - 1);
  return o.lr * (o.lr_floor + (1.0 - o.lr_floor) * 0.5 * (1.0 + std::cos(3.141592653589793 * u)));
}

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  std::array<double, kNumLossTerms> terms{};
  double extra = 0.0;    // stage-specific auxiliary value (commitment, x0 error, accuracy)
  double grad_norm = 0.0;
  double seconds = 0.0;
  int steps = 0;
};

class EpochAccumulator {
 public:
  void add(double loss, const std::array<double, kNumLossTerms>& terms, double extra, double grad_norm) {
    if (!std::isfinite(loss)) throw TrainingDiverged("training loss became non-finite at step " + std::to_string(n_));
    ++n_;
    rec_.loss += loss;
    for (int i = 0; i < kNumLossTerms; ++i) rec_.terms[i] += terms[i];
    rec_.extra += extra;
    rec_.grad_norm += grad_norm;
  }

  EpochRecord finish(int epoch, double seconds) {
    EpochRecord r = rec_;
    const double k = n_ > 0 ? 1.0 / n_ : 0.0;
    r.loss *= k;
    for (auto& t : r.terms) t *= k;
    r.extra *= k;
    r.grad_norm *= k;
    r.epoch = epoch;
    r.seconds = seconds;
    r.steps = n_;
    return r;
  }

 private:
  EpochRecord rec_;
  int n_ = 0;
};

class TrainingLog {
 public:
  TrainingLog(const std::string& path, std::string stage, std::string extra_name);
  void write(const EpochRecord& r);

 private:
  std::ofstream out_;
  std::string stage_, extra_name_;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace intertraj

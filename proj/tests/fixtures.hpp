#pragma once

// Small procedural samples shared by the model-level tests.

#include <vector>

#include "intertraj/conditioning/providers.hpp"
#include "intertraj/model/batch.hpp"
#include "intertraj/synth/dataset.hpp"

namespace testing {

struct SampleFixture {
  intertraj::SyntheticDataset data;
  intertraj::GridBounds bounds;
  std::vector<intertraj::SequenceSample> samples;
};

inline SampleFixture make_samples(int sequences, int horizon, std::uint64_t seed = 3,
                                  intertraj::SampleOptions opts = {}) {
  intertraj::DatasetConfig cfg;
  cfg.sequences = sequences;
  cfg.horizon = horizon;
  cfg.seed = seed;
  SampleFixture f;
  f.data = intertraj::generate_dataset(cfg);
  f.bounds = intertraj::compute_grid_bounds(f.data.trajectories);
  intertraj::HashTextEmbedder text(seed);
  intertraj::SyntheticImageEmbedder image(seed);
  intertraj::SampleBuilder builder(f.bounds, text, image, opts);
  f.samples = builder.build_all(f.data.trajectories, f.data.scenes);
  return f;
}

inline std::vector<const intertraj::SequenceSample*> all_of(const std::vector<intertraj::SequenceSample>& s) {
  std::vector<const intertraj::SequenceSample*> out;
  for (const auto& x : s) out.push_back(&x);
  return out;
}

// Narrow dimensions so double-precision models stay fast.
inline intertraj::ContactEncoderDims tiny_contact() { return {{2, 2, 2, 2}, {2, 2, 2, 1}, 32}; }

}  // namespace testing

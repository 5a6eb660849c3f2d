#pragma once

// Procedural interaction dataset: action templates instantiated on objects in
// two scenes, with per-frame scene descriptors for the image provider, and the
// four generalization splits.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "intertraj/conditioning/providers.hpp"
#include "intertraj/core/error.hpp"
#include "intertraj/trajectory/trajectory.hpp"

namespace intertraj {

// Names of the 24 built-in actions, 10 objects and 2 scenes.
const std::vector<std::string>& builtin_actions();
const std::vector<std::string>& builtin_objects();
const std::vector<std::string>& builtin_scenes();

struct DatasetConfig {
  int sequences = 480;
  int horizon = 30;
  int actions = 24;   // first n built-in actions
  int objects = 10;   // first n built-in objects
  int scenes = 2;
  double minority_scene_fraction = 0.15;  // share of the second scene
  double jitter = 1.0;                    // scales every per-sequence perturbation
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  TrajectorySet trajectories;
  std::vector<SceneRecord> scenes;
  // Steps at which the template prescribes contact, per sequence.
  std::vector<std::vector<std::uint8_t>> contact_phase;
};

// Sequence i instantiates task (action, object) number i mod (actions*objects),
// so every task appears once before any repeats.
SyntheticDataset generate_dataset(const DatasetConfig& cfg);

// Per-sequence generation with an explicit seed; used by generate_dataset.
InteractionTrajectory generate_sequence(const std::string& id, const std::string& action, const std::string& object,
                                        const std::string& scene, int horizon, double jitter, std::uint64_t seed,
                                        SceneSequence* frames = nullptr, std::vector<std::uint8_t>* phase = nullptr);

enum class SplitMode { Task, Object, Action, Scene };

SplitMode parse_split_mode(const std::string& s);
std::string to_string(SplitMode m);

struct SplitSpec {
  SplitMode mode = SplitMode::Task;
  std::set<std::string> held_out;  // labels (or "action|object" task keys) never in train
  std::vector<std::string> train, val, test;
};

// Label a sequence carries under the given mode.
std::string split_label(const InteractionTrajectory& t, SplitMode mode);

// 80:10:10 split in which every test label is absent from train. Held-out
// sequences that do not fit in test go to validation. Throws InvalidArgument
// when no set of labels has a size compatible with the ratios.
SplitSpec make_splits(const TrajectorySet& set, SplitMode mode, std::uint64_t seed);

// Structured text: `mode <m>`, `held_out <label>` and `train|val|test <id>` lines.
void save_split(const std::string& path, const SplitSpec& split);
SplitSpec load_split(const std::string& path);

// Sequences of `set` whose ids are listed, in list order.
TrajectorySet select(const TrajectorySet& set, const std::vector<std::string>& ids);
std::vector<SceneRecord> select(const std::vector<SceneRecord>& scenes, const std::vector<std::string>& ids);

}  // namespace intertraj

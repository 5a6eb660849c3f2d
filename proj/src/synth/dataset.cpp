#include "intertraj/synth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "intertraj/hand/rig.hpp"
#include "intertraj/hand/rotation.hpp"

namespace intertraj {

namespace {

constexpr double kPi = std::numbers::pi;

enum class Motion { Hold, Grab, Lift, Push, Pull, Slide, Roll, Circle, Tilt, Shake, Press, Tap, Wipe, Flip, Insert,
                    Place, Arc, Align, Remove };

struct ActionTemplate {
  std::string name;
  Motion motion;
  double amplitude;  // meters, or radians for rotations
  double cycles;
  std::array<bool, 5> fingers;
  bool palm;
  bool power;     // middle segments in contact as well
  bool shifting;  // contact window sweeps around the fingertips
  bool carries;   // object follows the hand once grasped
  double flex;    // target flexion per segment, radians
};

const std::vector<ActionTemplate>& templates() {
  static const std::vector<ActionTemplate> t = {
      {"grab", Motion::Grab, 0.03, 0, {1, 1, 1, 1, 1}, true, true, false, true, 0.75},
      {"open", Motion::Arc, 0.9, 0, {1, 1, 1, 1, 0}, false, true, false, true, 0.85},
      {"screw", Motion::Roll, 2.2, 0, {1, 1, 1, 0, 0}, false, false, true, true, 0.55},
      {"mix", Motion::Circle, 0.04, 2, {1, 1, 1, 0, 0}, false, false, false, true, 0.6},
      {"rotate", Motion::Roll, 1.4, 0, {1, 1, 0, 0, 0}, false, false, true, true, 0.5},
      {"align", Motion::Align, 0.04, 0, {1, 1, 1, 0, 0}, false, false, false, true, 0.45},
      {"slide", Motion::Slide, 0.12, 0, {0, 1, 1, 0, 0}, false, false, false, true, 0.3},
      {"lift", Motion::Lift, 0.15, 0, {1, 1, 1, 1, 1}, true, true, false, true, 0.9},
      {"place", Motion::Place, 0.1, 0, {1, 1, 1, 1, 1}, false, true, false, true, 0.85},
      {"pour", Motion::Tilt, 1.6, 0, {1, 1, 1, 1, 1}, true, true, false, true, 0.95},
      {"press", Motion::Press, 0.02, 0, {0, 1, 0, 0, 0}, false, false, false, false, 0.25},
      {"pull", Motion::Pull, 0.14, 0, {1, 1, 1, 1, 1}, false, true, false, true, 1.0},
      {"push", Motion::Push, 0.12, 0, {0, 0, 0, 0, 0}, true, false, false, true, 0.15},
      {"turn", Motion::Roll, -1.6, 0, {1, 1, 1, 1, 0}, false, true, true, true, 0.7},
      {"wipe", Motion::Wipe, 0.08, 2, {0, 1, 1, 1, 1}, true, false, false, true, 0.2},
      {"shake", Motion::Shake, 0.05, 3, {1, 1, 1, 1, 1}, true, true, false, true, 0.95},
      {"insert", Motion::Insert, 0.1, 0, {1, 1, 1, 0, 0}, false, false, false, true, 0.6},
      {"remove", Motion::Remove, 0.12, 0, {1, 1, 1, 1, 0}, false, true, false, true, 0.8},
      {"flip", Motion::Flip, kPi, 0, {1, 1, 1, 1, 1}, true, true, false, true, 0.7},
      {"tap", Motion::Tap, 0.025, 3, {0, 1, 0, 0, 0}, false, false, false, false, 0.2},
      {"hold", Motion::Hold, 0.01, 1, {1, 1, 1, 1, 1}, true, true, false, true, 0.85},
      {"close", Motion::Arc, -0.9, 0, {0, 0, 0, 0, 0}, true, false, false, true, 0.2},
      {"stir", Motion::Circle, 0.06, 3, {1, 1, 0, 0, 0}, false, false, true, true, 0.65},
      {"unscrew", Motion::Roll, -2.2, 0, {1, 1, 1, 0, 0}, false, false, true, true, 0.55},
  };
  return t;
}

struct ObjectTemplate {
  std::string name;
  double size;    // grasp aperture, meters
  double height;  // grasp point above the object origin
};

const std::vector<ObjectTemplate>& objects() {
  static const std::vector<ObjectTemplate> o = {
      {"mug", 0.08, 0.05},    {"bottle", 0.07, 0.09}, {"jar", 0.09, 0.06},  {"knife", 0.02, 0.01},
      {"box", 0.12, 0.06},    {"drawer", 0.03, 0.02}, {"lid", 0.10, 0.01},  {"spoon", 0.015, 0.01},
      {"sponge", 0.06, 0.02}, {"phone", 0.07, 0.01},
  };
  return o;
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Fingertip/palm vertex geometry on the template, used to pick contact patches.
struct PatchGeometry {
  struct Entry {
    int vertex;
    int finger;   // -1 for palm
    int segment;
    double phi;   // angle around the segment axis; -pi/2 faces the palm side
    double along; // palm: y coordinate
  };
  std::vector<Entry> entries;
  std::array<Vec3, 5> flex_axis;
};

const PatchGeometry& patches() {
  static const PatchGeometry geom = [] {
    const HandRig& rig = default_rig();
    PatchGeometry g;
    const Eigen::MatrixXd J = rig.joint_regressor * rig.template_vertices;
    for (int v = 0; v < kNumVertices; ++v) {
      Eigen::Index bone;
      rig.skin_weights.row(v).maxCoeff(&bone);
      const Vec3 p = rig.template_vertices.row(v).transpose();
      if (bone == 0) {
        g.entries.push_back({v, -1, 0, std::atan2(p.z(), p.x()), p.y()});
        continue;
      }
      const int f = static_cast<int>(bone - 1) / 3, s = static_cast<int>(bone - 1) % 3;
      const Vec3 a = J.row(bone).transpose();
      const Vec3 b = (s < 2 ? J.row(bone + 1) : J.row(16 + f)).transpose();
      const Vec3 d = (b - a).normalized();
      Vec3 u = d.cross(Vec3::UnitZ());
      u.normalize();
      const Vec3 w = u.cross(d).normalized();
      const Vec3 r = p - a;
      g.entries.push_back({v, f, s, std::atan2(r.dot(w), r.dot(u)), r.dot(d)});
    }
    for (int f = 0; f < 5; ++f) {
      const Vec3 d = (J.row(2 + 3 * f) - J.row(1 + 3 * f)).transpose().normalized();
      g.flex_axis[f] = d.cross(Vec3::UnitZ()).normalized();
    }
    return g;
  }();
  return geom;
}

double angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * kPi);
  return d > kPi ? 2.0 * kPi - d : d;
}

ContactMap contact_patch(const ActionTemplate& a, double window_center) {
  ContactMap c;
  for (const auto& e : patches().entries) {
    bool on = false;
    if (e.finger < 0) {
      on = a.palm && e.along > 0.03 && angle_gap(e.phi, -kPi / 2) < kPi / 4;
    } else if (a.fingers[static_cast<std::size_t>(e.finger)]) {
      const bool seg = e.segment == 2 || (a.power && e.segment == 1);
      on = seg && angle_gap(e.phi, window_center) < kPi / 3;
    }
    if (on) c.mask(e.vertex) = 1;
  }
  return c;
}

struct Jitter {
  std::mt19937_64 rng;
  double scale;
  double normal(double sd) { return std::normal_distribution<double>(0.0, sd * scale)(rng); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
};

}  // namespace

const std::vector<std::string>& builtin_actions() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& t : templates()) n.push_back(t.name);
    return n;
  }();
  return names;
}

const std::vector<std::string>& builtin_objects() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& o : objects()) n.push_back(o.name);
    return n;
  }();
  return names;
}

const std::vector<std::string>& builtin_scenes() {
  static const std::vector<std::string> names = {"kitchen", "workshop"};
  return names;
}

void DatasetConfig::validate() const {
  require(sequences >= 1, "dataset: sequence count must be positive");
  require(horizon >= 2, "dataset: horizon must be at least 2");
  require(actions >= 2 && actions <= static_cast<int>(builtin_actions().size()),
          "dataset: actions must lie in [2, " + std::to_string(builtin_actions().size()) + "]");
  require(objects >= 2 && objects <= static_cast<int>(builtin_objects().size()),
          "dataset: objects must lie in [2, " + std::to_string(builtin_objects().size()) + "]");
  require(scenes == 1 || scenes == 2, "dataset: scenes must be 1 or 2");
  require(minority_scene_fraction > 0.0 && minority_scene_fraction < 1.0,
          "dataset: minority scene fraction must lie in (0, 1)");
  require(jitter >= 0.0, "dataset: jitter must be non-negative");
}

InteractionTrajectory generate_sequence(const std::string& id, const std::string& action, const std::string& object,
                                        const std::string& scene, int horizon, double jitter, std::uint64_t seed,
                                        SceneSequence* frames, std::vector<std::uint8_t>* phase) {
  const auto at = std::find_if(templates().begin(), templates().end(), [&](const auto& t) { return t.name == action; });
  const auto ot = std::find_if(objects().begin(), objects().end(), [&](const auto& o) { return o.name == object; });
  if (at == templates().end()) throw InvalidArgument("unknown action '" + action + "'");
  if (ot == objects().end()) throw InvalidArgument("unknown object '" + object + "'");
  require(horizon >= 2, "generate_sequence: horizon must be at least 2");
  const ActionTemplate& A = *at;
  const ObjectTemplate& O = *ot;
  const bool second_scene = scene != builtin_scenes()[0];
  Jitter J{std::mt19937_64(seed), jitter};

  InteractionTrajectory tr = InteractionTrajectory::with_horizon(horizon);
  tr.id = id;
  tr.action_label = action;
  tr.object_label = object;
  tr.scene_label = scene;
  for (int k = 0; k < kNumShapeParams; ++k) tr.shape.beta(k) = J.normal(0.4);

  // Object and grasp placement in the reference (first camera) frame.
  const Vec3 obj = second_scene ? Vec3(J.uniform(-0.10, 0.10), J.uniform(0.00, 0.08), J.uniform(0.30, 0.40))
                                : Vec3(J.uniform(-0.12, 0.12), J.uniform(0.06, 0.16), J.uniform(0.38, 0.50));
  const double yaw = J.uniform(-0.6, 0.6);
  const Vec3 up(0.0, -1.0, 0.0);
  const Vec3 grasp = obj + O.height * up + Vec3(-0.5 * O.size, 0.0, -0.02);
  const Vec3 start = grasp + Vec3(-0.09 + J.normal(0.02), 0.08 + J.normal(0.02), -0.07 + J.normal(0.02));
  const double approach_end = std::clamp(0.3 + J.normal(0.04), 0.15, 0.45);
  // Palm facing the object, fingers pointing forward and up.
  const Mat3 base = axis_angle_matrix<double>(Vec3::UnitY(), yaw + J.normal(0.1)) *
                    axis_angle_matrix<double>(Vec3::UnitX(), -1.1 + J.normal(0.1)) *
                    axis_angle_matrix<double>(Vec3::UnitZ(), 0.4 + J.normal(0.1));
  const double amp = A.amplitude * (1.0 + J.normal(0.15));
  const double flex = std::clamp(A.flex + 0.8 * (0.05 - O.size) + J.normal(0.05), 0.05, 1.4);
  std::array<double, 5> finger_bias{};
  for (auto& b : finger_bias) b = J.normal(0.05);
  const double cycles = std::max(1.0, A.cycles + std::round(J.normal(0.3)));
  const double spread_center = -kPi / 2 + J.normal(0.1);

  const auto& geom = patches();
  if (frames) frames->clear();
  if (phase) phase->assign(static_cast<std::size_t>(horizon), 0);
  for (int t = 0; t < horizon; ++t) {
    const double u = static_cast<double>(t) / (horizon - 1);
    const double app = smoothstep(u / approach_end);
    const double s = u <= approach_end ? 0.0 : (u - approach_end) / (1.0 - approach_end);
    const double ss = smoothstep(s);
    Vec3 pos = start + app * (grasp - start);
    Mat3 rot = base;
    double grip = 0.1 + app * (flex - 0.1);
    bool contact = u >= approach_end - 1e-12;

    switch (A.motion) {
      case Motion::Hold: pos += amp * std::sin(2 * kPi * s) * Vec3(1, 0, 0); break;
      case Motion::Grab: pos += amp * ss * up; grip += 0.2 * ss; break;
      case Motion::Lift: pos += amp * ss * up; break;
      case Motion::Push: pos += amp * ss * Vec3(0, 0, 1); break;
      case Motion::Pull: pos -= amp * ss * Vec3(0, 0, 1); break;
      case Motion::Slide: pos += amp * ss * Vec3(1, 0, 0); break;
      case Motion::Roll: rot = rot * axis_angle_matrix<double>(Vec3::UnitY(), amp * ss); break;
      case Motion::Circle:
        pos += amp * Vec3(std::sin(2 * kPi * cycles * s), 0, 1 - std::cos(2 * kPi * cycles * s));
        break;
      case Motion::Tilt:
        pos += 0.08 * ss * up;
        rot = axis_angle_matrix<double>(Vec3::UnitZ(), amp * smoothstep(2 * s - 0.6)) * rot;
        break;
      case Motion::Shake: pos += amp * ss * 2 * up + amp * std::sin(2 * kPi * cycles * s) * up; break;
      case Motion::Press: pos -= amp * ss * up; break;
      case Motion::Tap: {
        const double w = std::sin(kPi * cycles * s);
        pos += amp * (1.0 - w * w) * up;
        contact = contact && w * w > 0.6;
        break;
      }
      case Motion::Wipe: pos += amp * std::sin(2 * kPi * cycles * s) * Vec3(1, 0, 0); break;
      case Motion::Flip:
        pos += 0.06 * ss * up;
        rot = rot * axis_angle_matrix<double>(Vec3::UnitY(), amp * ss);
        break;
      case Motion::Insert:
        pos += amp * smoothstep(2 * s) * Vec3(0, 0, 1) - 0.5 * amp * smoothstep(2 * s - 1) * up;
        break;
      case Motion::Place:
        pos -= amp * smoothstep(s / 0.8) * up;
        contact = contact && s < 0.85;
        if (s >= 0.85) grip = 0.1 + (flex - 0.1) * (1.0 - smoothstep((s - 0.85) / 0.15));
        break;
      case Motion::Arc: {
        const double ang = amp * ss;
        pos += 0.12 * Vec3(std::sin(std::abs(ang)) * (amp > 0 ? -1 : 1), 0, -(1 - std::cos(ang)));
        rot = axis_angle_matrix<double>(Vec3::UnitY(), ang) * rot;
        break;
      }
      case Motion::Align:
        pos += amp * ss * Vec3(1, 0, 0.5);
        rot = axis_angle_matrix<double>(Vec3::UnitY(), 0.3 * ss) * rot;
        break;
      case Motion::Remove: pos += amp * smoothstep(2 * s) * up - amp * smoothstep(2 * s - 1) * Vec3(0, 0, 1); break;
    }

    HandPoseParams p = HandPoseParams::identity();
    for (int f = 0; f < 5; ++f) {
      const double k = f == 0 ? 0.6 : 1.0;
      for (int seg = 0; seg < 3; ++seg) {
        const double ang = -(grip + finger_bias[static_cast<std::size_t>(f)]) * k * (seg == 0 ? 0.8 : 1.0);
        p.articulation.segment<6>(6 * (3 * f + seg)) =
            matrix_to_rot6d(axis_angle_matrix<double>(geom.flex_axis[static_cast<std::size_t>(f)], ang));
      }
    }
    p.global_rot6d = matrix_to_rot6d(rot);
    p.global_trans = pos;
    tr.set_pose(t, p);

    if (contact) {
      const double center = A.shifting ? spread_center + 0.9 * std::sin(2 * kPi * s * (A.amplitude > 0 ? 1 : -1))
                                       : spread_center;
      ContactMap c = contact_patch(A, center);
      tr.set_contact(t, c);
      if (phase) (*phase)[static_cast<std::size_t>(t)] = 1;
    }

    if (frames) {
      SceneDescriptor d;
      d.scene_label = scene;
      d.object_label = object;
      d.object_position = A.carries && s > 0.0 ? obj + (pos - grasp) : obj;
      d.object_yaw = yaw;
      d.hand_visible = true;
      d.hand_position = pos;
      d.hand_rot6d = p.global_rot6d;
      d.grip = grip;
      d.image_key = id + "/" + std::to_string(t);
      frames->push_back(d);
    }
  }
  tr.validate();
  return tr;
}

SyntheticDataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  SyntheticDataset ds;
  const int tasks = cfg.actions * cfg.objects;
  std::mt19937_64 master(cfg.seed);
  std::bernoulli_distribution minority(cfg.minority_scene_fraction);
  std::uniform_int_distribution<int> task_shift(0, tasks - 1);
  // A random rotation of the task order per pass keeps small datasets varied.
  int shift = task_shift(master);
  ds.trajectories.reserve(static_cast<std::size_t>(cfg.sequences));
  for (int i = 0; i < cfg.sequences; ++i) {
    if (i > 0 && i % tasks == 0) shift = task_shift(master);
    const int task = (i + shift) % tasks;
    const std::string& action = builtin_actions()[static_cast<std::size_t>(task / cfg.objects)];
    const std::string& object = builtin_objects()[static_cast<std::size_t>(task % cfg.objects)];
    const std::string& scene = builtin_scenes()[cfg.scenes == 2 && minority(master) ? 1 : 0];
    const std::uint64_t seq_seed = master();
    char id[32];
    std::snprintf(id, sizeof id, "seq%05d", i);
    SceneRecord rec;
    rec.id = id;
    std::vector<std::uint8_t> phase;
    ds.trajectories.push_back(
        generate_sequence(id, action, object, scene, cfg.horizon, cfg.jitter, seq_seed, &rec.frames, &phase));
    ds.scenes.push_back(std::move(rec));
    ds.contact_phase.push_back(std::move(phase));
  }
  return ds;
}

SplitMode parse_split_mode(const std::string& s) {
  if (s == "task") return SplitMode::Task;
  if (s == "object") return SplitMode::Object;
  if (s == "action") return SplitMode::Action;
  if (s == "scene") return SplitMode::Scene;
  throw InvalidArgument("unknown split mode '" + s + "' (expected task, object, action or scene)");
}

std::string to_string(SplitMode m) {
  switch (m) {
    case SplitMode::Task: return "task";
    case SplitMode::Object: return "object";
    case SplitMode::Action: return "action";
    case SplitMode::Scene: return "scene";
  }
  return "task";
}

std::string split_label(const InteractionTrajectory& t, SplitMode mode) {
  switch (mode) {
    case SplitMode::Task: return t.action_label + "|" + t.object_label;
    case SplitMode::Object: return t.object_label;
    case SplitMode::Action: return t.action_label;
    case SplitMode::Scene: return t.scene_label;
  }
  return {};
}

SplitSpec make_splits(const TrajectorySet& set, SplitMode mode, std::uint64_t seed) {
  const int n = static_cast<int>(set.size());
  require(n >= 3, "make_splits: need at least 3 sequences");
  const int n_train = static_cast<int>(std::lround(0.8 * n));
  const int n_test = (n - n_train + 1) / 2;
  const int n_val = n - n_train - n_test;
  require(n_test >= 1, "make_splits: dataset too small for a 10% test split");
  std::mt19937_64 rng(seed);

  std::map<std::string, std::vector<int>> by_label;
  for (int i = 0; i < n; ++i) by_label[split_label(set[static_cast<std::size_t>(i)], mode)].push_back(i);
  std::vector<std::string> labels;
  for (const auto& [l, _] : by_label) labels.push_back(l);
  require(labels.size() >= 2, "make_splits: mode '" + to_string(mode) + "' needs at least two distinct labels");
  std::shuffle(labels.begin(), labels.end(), rng);

  // Subset sum over label sizes: held-out sequences must fill test and fit in
  // test + validation. Ties go to the earliest labels in the shuffled order.
  const int lo = n_test, hi = n_test + n_val;
  std::vector<int> from(static_cast<std::size_t>(hi + 1), -2);  // label index that reached the sum
  from[0] = -1;
  for (int li = 0; li < static_cast<int>(labels.size()); ++li) {
    const int c = static_cast<int>(by_label[labels[static_cast<std::size_t>(li)]].size());
    for (int s = hi; s >= c; --s)
      if (from[static_cast<std::size_t>(s)] == -2 && from[static_cast<std::size_t>(s - c)] != -2 &&
          from[static_cast<std::size_t>(s - c)] < li)
        from[static_cast<std::size_t>(s)] = li;
  }
  std::vector<int> feasible;
  for (int s = lo; s <= hi; ++s)
    if (from[static_cast<std::size_t>(s)] != -2) feasible.push_back(s);
  if (feasible.empty())
    throw InvalidArgument("make_splits: no set of " + to_string(mode) + " labels holds between " + std::to_string(lo) +
                          " and " + std::to_string(hi) + " sequences");
  // Prefer the smallest feasible held-out set so validation keeps seen labels.
  int s = feasible.front();

  SplitSpec spec;
  spec.mode = mode;
  std::vector<int> held;
  while (s > 0) {
    const int li = from[static_cast<std::size_t>(s)];
    const auto& label = labels[static_cast<std::size_t>(li)];
    spec.held_out.insert(label);
    const auto& members = by_label[label];
    held.insert(held.end(), members.begin(), members.end());
    s -= static_cast<int>(members.size());
  }
  std::vector<int> rest;
  std::vector<char> is_held(static_cast<std::size_t>(n), 0);
  for (int i : held) is_held[static_cast<std::size_t>(i)] = 1;
  for (int i = 0; i < n; ++i)
    if (!is_held[static_cast<std::size_t>(i)]) rest.push_back(i);
  std::sort(held.begin(), held.end());
  std::shuffle(held.begin(), held.end(), rng);
  std::shuffle(rest.begin(), rest.end(), rng);

  auto id = [&](int i) { return set[static_cast<std::size_t>(i)].id; };
  for (int k = 0; k < static_cast<int>(held.size()); ++k)
    (k < n_test ? spec.test : spec.val).push_back(id(held[static_cast<std::size_t>(k)]));
  std::size_t r = 0;
  while (static_cast<int>(spec.val.size()) < n_val) spec.val.push_back(id(rest[r++]));
  for (; r < rest.size(); ++r) spec.train.push_back(id(rest[r]));
  return spec;
}

void save_split(const std::string& path, const SplitSpec& split) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write split file " + path);
  out << "# split file: one `key value` pair per line\n";
  out << "mode " << to_string(split.mode) << "\n";
  for (const auto& l : split.held_out) out << "held_out " << l << "\n";
  for (const auto& i : split.train) out << "train " << i << "\n";
  for (const auto& i : split.val) out << "val " << i << "\n";
  for (const auto& i : split.test) out << "test " << i << "\n";
  if (!out) throw Error("failed writing split file " + path);
}

SplitSpec load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("split file not found: " + path);
  SplitSpec s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw FormatError(path + ":" + std::to_string(lineno) + ": expected `key value`");
    const std::string key = line.substr(0, sp), value = line.substr(sp + 1);
    if (key == "mode") s.mode = parse_split_mode(value);
    else if (key == "held_out") s.held_out.insert(value);
    else if (key == "train") s.train.push_back(value);
    else if (key == "val") s.val.push_back(value);
    else if (key == "test") s.test.push_back(value);
    else throw FormatError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return s;
}

TrajectorySet select(const TrajectorySet& set, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const InteractionTrajectory*> by_id;
  for (const auto& t : set) by_id[t.id] = &t;
  TrajectorySet out;
  out.reserve(ids.size());
  for (const auto& i : ids) {
    auto it = by_id.find(i);
    if (it == by_id.end()) throw InvalidArgument("unknown sequence id " + i);
    out.push_back(*it->second);
  }
  return out;
}

std::vector<SceneRecord> select(const std::vector<SceneRecord>& scenes, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const SceneRecord*> by_id;
  for (const auto& s : scenes) by_id[s.id] = &s;
  std::vector<SceneRecord> out;
  out.reserve(ids.size());
  for (const auto& i : ids) {
    auto it = by_id.find(i);
    if (it == by_id.end()) throw InvalidArgument("no scene descriptors for sequence " + i);
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace intertraj

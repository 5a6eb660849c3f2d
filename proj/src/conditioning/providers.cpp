#include "intertraj/conditioning/providers.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "intertraj/core/binary_io.hpp"
#include "intertraj/core/error.hpp"

namespace intertraj {

namespace {

constexpr std::uint32_t kSceneVersion = 1;
constexpr int kObjectCode = 8;
constexpr int kSceneCode = 4;
// identity codes + position + (cos, sin) yaw
constexpr int kObjectInputs = kObjectCode + kSceneCode + 3 + 2;
// position + rot6d + grip
constexpr int kHandInputs = 3 + 6 + 1;

Eigen::VectorXd code_for(const std::string& label, int dims, std::uint64_t seed) {
  std::mt19937_64 rng(stable_hash(label, seed));
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd v(dims);
  for (int i = 0; i < dims; ++i) v(i) = n(rng);
  return v / v.norm();
}

Eigen::MatrixXd gaussian(int rows, int cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Eigen::VectorXd phases(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace

std::uint64_t stable_hash(const std::string& s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ull ^ (seed * 0x9e3779b97f4a7c15ull);
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Eigen::VectorXd HashTextEmbedder::embed(const std::string& text) const {
  require(!text.empty(), "embed_text: empty string");
  return code_for(text, kTextDims, seed_ ^ 0x7465787400000000ull);
}

void SceneDescriptor::validate() const {
  require(!scene_label.empty() && !object_label.empty(), "scene descriptor: empty label");
  require(object_position.allFinite() && std::isfinite(object_yaw) && hand_position.allFinite() &&
              hand_rot6d.allFinite() && std::isfinite(grip),
          "scene descriptor: non-finite field");
}

SceneDescriptor SceneDescriptor::without_hand() const {
  SceneDescriptor d = *this;
  d.hand_visible = false;
  return d;
}

SyntheticImageEmbedder::SyntheticImageEmbedder(std::uint64_t seed) : seed_(seed) {
  std::mt19937_64 rng(seed ^ 0x696d616765ull);
  constexpr int obj = kImageHandOffset, hand = kImageDims - kImageHandOffset;
  object_proj_ = gaussian(obj / 2, kObjectInputs, 1.0 / std::sqrt(double(kObjectInputs)), rng);
  object_freq_ = gaussian(obj / 2, kObjectInputs, 1.0, rng);
  object_phase_ = phases(obj / 2, rng);
  hand_proj_ = gaussian(hand / 2, kHandInputs, 1.0 / std::sqrt(double(kHandInputs)), rng);
  hand_freq_ = gaussian(hand / 2, kHandInputs, 1.0, rng);
  hand_phase_ = phases(hand / 2, rng);
}

Eigen::VectorXd SyntheticImageEmbedder::embed(const SceneDescriptor& s) const {
  s.validate();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kImageDims);
  Eigen::VectorXd u(kObjectInputs);
  // Positions in decimeters so that the features vary over hand-scale motion.
  u << code_for(s.object_label, kObjectCode, seed_), code_for(s.scene_label, kSceneCode, seed_ + 1),
      10.0 * s.object_position, std::cos(s.object_yaw), std::sin(s.object_yaw);
  const int half_obj = kImageHandOffset / 2;
  out.segment(0, half_obj) = object_proj_ * u;
  out.segment(half_obj, half_obj) =
      ((object_freq_ * u + object_phase_).array().cos() * std::sqrt(2.0 / half_obj)).matrix();
  if (s.hand_visible) {
    Eigen::VectorXd h(kHandInputs);
    h << 10.0 * s.hand_position, s.hand_rot6d, s.grip;
    const int half_hand = (kImageDims - kImageHandOffset) / 2;
    out.segment(kImageHandOffset, half_hand) = hand_proj_ * h;
    out.segment(kImageHandOffset + half_hand, half_hand) =
        ((hand_freq_ * h + hand_phase_).array().cos() * std::sqrt(2.0 / half_hand)).matrix();
  }
  return out;
}

VectorTable VectorTable::load(const std::string& path, int expected_dims) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open feature table " + path);
  VectorTable t;
  t.source_ = path;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    std::vector<double> vals;
    double x;
    while (ss >> x) vals.push_back(x);
    if (!ss.eof()) throw FormatError(path + ":" + std::to_string(lineno) + ": malformed number");
    if (static_cast<int>(vals.size()) != expected_dims)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(expected_dims) +
                        " values, got " + std::to_string(vals.size()));
    t.rows_[key] = Eigen::Map<Eigen::VectorXd>(vals.data(), expected_dims);
  }
  return t;
}

const Eigen::VectorXd& VectorTable::at(const std::string& key) const {
  auto it = rows_.find(key);
  if (it == rows_.end()) throw InvalidArgument("feature table " + source_ + " has no entry for '" + key + "'");
  return it->second;
}

std::unique_ptr<TextEmbedder> make_text_embedder(const std::string& spec, std::uint64_t seed) {
  if (spec == "hash") return std::make_unique<HashTextEmbedder>(seed);
  if (spec.rfind("table:", 0) == 0)
    return std::make_unique<TableTextEmbedder>(VectorTable::load(spec.substr(6), kTextDims));
  throw InvalidArgument("unknown text provider '" + spec + "' (expected hash or table:<path>)");
}

std::unique_ptr<ImageEmbedder> make_image_embedder(const std::string& spec, std::uint64_t seed) {
  if (spec == "synthetic") return std::make_unique<SyntheticImageEmbedder>(seed);
  if (spec.rfind("table:", 0) == 0)
    return std::make_unique<TableImageEmbedder>(VectorTable::load(spec.substr(6), kImageDims));
  throw InvalidArgument("unknown image provider '" + spec + "' (expected synthetic or table:<path>)");
}

void save_scenes(const std::string& path, const std::vector<SceneRecord>& scenes) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(scenes.size()));
  for (const auto& rec : scenes) {
    w.str(rec.id);
    w.u32(static_cast<std::uint32_t>(rec.frames.size()));
    for (const auto& f : rec.frames) {
      w.str(f.scene_label);
      w.str(f.object_label);
      w.f64s({f.object_position.data(), 3});
      w.f64(f.object_yaw);
      w.u8(f.hand_visible ? 1 : 0);
      w.f64s({f.hand_position.data(), 3});
      w.f64s({f.hand_rot6d.data(), 6});
      w.f64(f.grip);
      w.str(f.image_key);
    }
  }
  write_container(path, "SCNE", kSceneVersion, w.buffer());
}

std::vector<SceneRecord> load_scenes(const std::string& path) {
  const std::string payload = read_container(path, "SCNE", kSceneVersion);
  ByteReader r(payload);
  std::vector<SceneRecord> out(r.u32());
  for (auto& rec : out) {
    rec.id = r.str();
    rec.frames.resize(r.u32());
    for (auto& f : rec.frames) {
      f.scene_label = r.str();
      f.object_label = r.str();
      r.f64s({f.object_position.data(), 3});
      f.object_yaw = r.f64();
      f.hand_visible = r.u8() != 0;
      r.f64s({f.hand_position.data(), 3});
      r.f64s({f.hand_rot6d.data(), 6});
      f.grip = r.f64();
      f.image_key = r.str();
    }
  }
  if (!r.done()) throw FormatError(path + ": trailing bytes in scene payload");
  return out;
}

}  // namespace intertraj

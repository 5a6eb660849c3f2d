#pragma once

// Text and image feature providers. The defaults are synthetic stand-ins for
// pretrained encoders; VectorTable plugs in features computed elsewhere.

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "intertraj/hand/types.hpp"

namespace intertraj {

inline constexpr int kTextDims = 512;
inline constexpr int kImageDims = 768;
inline constexpr int kContactFeatureDims = 32;
// Image components [kImageHandOffset, kImageDims) depend only on the visible hand.
inline constexpr int kImageHandOffset = 512;

// Stable 64-bit FNV-1a hash, used to derive per-string seeds.
std::uint64_t stable_hash(const std::string& s, std::uint64_t seed = 0);

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual Eigen::VectorXd embed(const std::string& text) const = 0;
};

// Unit-norm Gaussian vector seeded by a hash of the string.
class HashTextEmbedder final : public TextEmbedder {
 public:
  explicit HashTextEmbedder(std::uint64_t seed = 0) : seed_(seed) {}
  Eigen::VectorXd embed(const std::string& text) const override;

 private:
  std::uint64_t seed_;
};

// What a single video frame shows, in the reference frame.
struct SceneDescriptor {
  std::string scene_label;
  std::string object_label;
  Vec3 object_position = Vec3::Zero();  // meters
  double object_yaw = 0.0;              // radians about the camera y axis
  bool hand_visible = true;
  Vec3 hand_position = Vec3::Zero();  // wrist, meters
  Vec6 hand_rot6d = (Vec6() << 1, 0, 0, 0, 1, 0).finished();
  double grip = 0.0;      // mean finger flexion, radians
  std::string image_key;  // lookup key for external features; may be empty

  void validate() const;
  SceneDescriptor without_hand() const;
};

using SceneSequence = std::vector<SceneDescriptor>;

class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  virtual Eigen::VectorXd embed(const SceneDescriptor& scene) const = 0;
};

// Smooth deterministic function of the descriptor: the first 512 components
// mix scene/object identity and object pose, the last 256 encode the hand state
// and are exactly zero when the hand is not visible. Each block is half
// random linear projections, half random Fourier features.
class SyntheticImageEmbedder final : public ImageEmbedder {
 public:
  explicit SyntheticImageEmbedder(std::uint64_t seed = 0);
  Eigen::VectorXd embed(const SceneDescriptor& scene) const override;

 private:
  std::uint64_t seed_;
  Eigen::MatrixXd object_proj_, object_freq_;
  Eigen::VectorXd object_phase_;
  Eigen::MatrixXd hand_proj_, hand_freq_;
  Eigen::VectorXd hand_phase_;
};

// Text table of precomputed vectors, one per line: `key v1 v2 ... vn`
// (whitespace separated; keys cannot contain whitespace; '#' starts a comment).
class VectorTable {
 public:
  static VectorTable load(const std::string& path, int expected_dims);
  const Eigen::VectorXd& at(const std::string& key) const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::unordered_map<std::string, Eigen::VectorXd> rows_;
  std::string source_;
};

class TableTextEmbedder final : public TextEmbedder {
 public:
  explicit TableTextEmbedder(VectorTable table) : table_(std::move(table)) {}
  Eigen::VectorXd embed(const std::string& text) const override { return table_.at(text); }

 private:
  VectorTable table_;
};

// Looks features up by SceneDescriptor::image_key.
class TableImageEmbedder final : public ImageEmbedder {
 public:
  explicit TableImageEmbedder(VectorTable table) : table_(std::move(table)) {}
  Eigen::VectorXd embed(const SceneDescriptor& scene) const override { return table_.at(scene.image_key); }

 private:
  VectorTable table_;
};

// Provider specs: "hash" / "synthetic" select the built-in providers,
// "table:<path>" loads a VectorTable.
std::unique_ptr<TextEmbedder> make_text_embedder(const std::string& spec, std::uint64_t seed);
std::unique_ptr<ImageEmbedder> make_image_embedder(const std::string& spec, std::uint64_t seed);

// Scene sidecar container, kind "SCNE", version 1: u32 count, then per
// sequence str id, u32 T and T descriptors.
struct SceneRecord {
  std::string id;
  SceneSequence frames;
};
void save_scenes(const std::string& path, const std::vector<SceneRecord>& scenes);
std::vector<SceneRecord> load_scenes(const std::string& path);

}  // namespace intertraj

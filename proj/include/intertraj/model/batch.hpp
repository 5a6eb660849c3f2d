#pragma once

// Per-sequence model inputs and targets, prepared once from a trajectory and
// its scene descriptors, and stacked into batches for training/inference.

#include <optional>
#include <string>
#include <vector>

#include "intertraj/conditioning/contact_encoder.hpp"
#include "intertraj/conditioning/providers.hpp"
#include "intertraj/model/loss.hpp"
#include "intertraj/trajectory/voxel.hpp"

namespace intertraj {

inline constexpr int kEncoderInputDims = kPoseDims + kNumVertices;  // 877

enum class HandVisibility { Visible, NoHand };

struct SampleOptions {
  HandVisibility visibility = HandVisibility::Visible;
};

struct SequenceSample {
  std::string id, action, object, scene;
  int horizon = 0;
  ad::Tensor<float> encoder_input;  // T x 877: pose with normalized translation | contacts
  ad::Tensor<float> pose;           // T x 99, translation in meters
  ad::Tensor<float> contacts;       // T x 778
  ad::Tensor<float> centroid;       // T x 3 (zero where there is no contact)
  std::vector<std::optional<Vec3>> contact_points;  // T, GT contact centroids
  ad::Tensor<float> shape;          // 1 x 10
  ad::Tensor<float> text;           // 1 x 512
  ad::Tensor<float> images;         // T x 768
  ad::Tensor<double> joints;        // T x 63, GT joints in meters
};

// Builds samples with fixed bounds and providers. Scene sequences must have one
// descriptor per step.
class SampleBuilder {
 public:
  SampleBuilder(const GridBounds& bounds, const TextEmbedder& text, const ImageEmbedder& image,
                SampleOptions opts = {}, const HandRig& rig = default_rig());

  SequenceSample build(const InteractionTrajectory& traj, const SceneSequence& scenes) const;
  std::vector<SequenceSample> build_all(const TrajectorySet& set, const std::vector<SceneRecord>& scenes) const;

  const GridBounds& bounds() const { return bounds_; }

 private:
  GridBounds bounds_;
  const TextEmbedder* text_;
  const ImageEmbedder* image_;
  SampleOptions opts_;
  const HandRig* rig_;
};

// Stacked batch with rows ordered (sequence, step).
template <typename S>
struct Batch {
  int size = 0;
  int horizon = 0;
  ad::Tensor<S> encoder_input;  // B*T x 877
  ad::Tensor<S> text;           // B*T x 512 (per-sequence text on every step)
  ad::Tensor<S> images;         // B*T x 768, per-step frames
  ad::Tensor<S> image0;         // B*T x 768, frame 0 on every step
  ad::Tensor<S> goal;           // B*T x 768, last frame on every step
  ad::Tensor<S> text_seq;       // B x 512
  ad::Tensor<S> image0_seq;     // B x 768
  ad::Tensor<S> goal_seq;       // B x 768
  ad::Tensor<S> point0;         // B x 3, frame-0 contact point (meters)
  HeatmapBatch<S> heat_steps;   // B*T points
  HeatmapBatch<S> heat0;        // B points
  LossTargets<S> targets;
  std::vector<const SequenceSample*> samples;
};

template <typename S>
Batch<S> make_batch(const std::vector<const SequenceSample*>& samples, const GridBounds& bounds, double sigma_voxels) {
  require(!samples.empty(), "make_batch: empty batch");
  const int T = samples.front()->horizon;
  const int B = static_cast<int>(samples.size());
  Batch<S> b;
  b.size = B;
  b.horizon = T;
  b.samples = samples;
  const Eigen::Index N = Eigen::Index(B) * T;
  b.encoder_input.resize(N, kEncoderInputDims);
  b.text.resize(N, kTextDims);
  b.images.resize(N, kImageDims);
  b.image0.resize(N, kImageDims);
  b.goal.resize(N, kImageDims);
  b.text_seq.resize(B, kTextDims);
  b.image0_seq.resize(B, kImageDims);
  b.goal_seq.resize(B, kImageDims);
  b.point0.resize(B, 3);
  b.targets.pose.resize(N, kPoseDims);
  b.targets.contacts.resize(N, kNumVertices);
  b.targets.centroid.resize(N, 3);
  b.targets.shape.resize(N, kNumShapeParams);
  std::vector<std::optional<Vec3>> step_points, first_points;
  step_points.reserve(static_cast<std::size_t>(N));
  for (int s = 0; s < B; ++s) {
    const SequenceSample& smp = *samples[static_cast<std::size_t>(s)];
    require(smp.horizon == T, "make_batch: mixed horizons");
    const Eigen::Index r0 = Eigen::Index(s) * T;
    b.encoder_input.middleRows(r0, T) = smp.encoder_input.cast<S>();
    b.images.middleRows(r0, T) = smp.images.cast<S>();
    b.targets.pose.middleRows(r0, T) = smp.pose.cast<S>();
    b.targets.contacts.middleRows(r0, T) = smp.contacts.cast<S>();
    b.targets.centroid.middleRows(r0, T) = smp.centroid.cast<S>();
    b.text_seq.row(s) = smp.text.row(0).cast<S>();
    b.image0_seq.row(s) = smp.images.row(0).cast<S>();
    b.goal_seq.row(s) = smp.images.row(T - 1).cast<S>();
    for (int t = 0; t < T; ++t) {
      b.text.row(r0 + t) = b.text_seq.row(s);
      b.image0.row(r0 + t) = b.image0_seq.row(s);
      b.goal.row(r0 + t) = b.goal_seq.row(s);
      b.targets.shape.row(r0 + t) = smp.shape.row(0).cast<S>();
      step_points.push_back(smp.contact_points[static_cast<std::size_t>(t)]);
      if (smp.contact_points[static_cast<std::size_t>(t)]) b.targets.contact_rows.push_back(r0 + t);
    }
    first_points.push_back(smp.contact_points.front());
    const Vec3 p0 = smp.contact_points.front().value_or(Vec3::Zero());
    for (int a = 0; a < 3; ++a) b.point0(s, a) = static_cast<S>(p0(a));
  }
  b.heat_steps = make_heatmap_batch<S>(step_points, bounds, sigma_voxels);
  b.heat0 = make_heatmap_batch<S>(first_points, bounds, sigma_voxels);
  return b;
}

// Deterministic shuffled batching of indices 0..n-1.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::mt19937_64& rng,
                                                   bool shuffle = true);

}  // namespace intertraj

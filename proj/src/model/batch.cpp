#include "intertraj/model/batch.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "intertraj/hand/hand_model.hpp"

namespace intertraj {

SampleBuilder::SampleBuilder(const GridBounds& bounds, const TextEmbedder& text, const ImageEmbedder& image,
                             SampleOptions opts, const HandRig& rig)
    : bounds_(bounds), text_(&text), image_(&image), opts_(opts), rig_(&rig) {
  bounds_.validate();
}

SequenceSample SampleBuilder::build(const InteractionTrajectory& traj, const SceneSequence& scenes) const {
  traj.validate();
  const int T = traj.horizon();
  if (static_cast<int>(scenes.size()) != T)
    throw InvalidArgument("sample " + traj.id + ": expected one scene descriptor per step");
  SequenceSample s;
  s.id = traj.id;
  s.action = traj.action_label;
  s.object = traj.object_label;
  s.scene = traj.scene_label;
  s.horizon = T;

  const auto sc = TranslationScaling::from_bounds(bounds_);
  Eigen::Matrix<double, Eigen::Dynamic, kPoseDims, Eigen::RowMajor> normalized = traj.poses;
  normalize_translation<double>(normalized, sc);
  s.encoder_input.resize(T, kEncoderInputDims);
  s.encoder_input.leftCols(kPoseDims) = normalized.cast<float>();
  s.encoder_input.rightCols(kNumVertices) = traj.contacts.cast<float>();
  s.pose = traj.poses.cast<float>();
  s.contacts = traj.contacts.cast<float>();
  s.shape = traj.shape.beta.transpose().cast<float>();

  const HandLayer<double> hand(*rig_);
  ad::Graph<double> g(false, 0, false);
  ad::Tensor<double> shape = traj.shape.beta.transpose().replicate(T, 1);
  ad::Tensor<double> poses = traj.poses;
  auto out = hand(g, g.constant(shape), g.constant(poses));
  s.joints = out.joints.value();
  s.centroid = ad::Tensor<float>::Zero(T, 3);
  for (int t = 0; t < T; ++t) {
    HandMesh mesh{unflatten_points(out.vertices.value().row(t)), rig_->faces};
    auto c = contact_centroid(mesh, traj.contact(t));
    s.contact_points.push_back(c);
    if (c) s.centroid.row(t) = c->transpose().cast<float>();
  }

  s.text = text_->embed(traj.action_label).transpose().cast<float>();
  s.images.resize(T, kImageDims);
  for (int t = 0; t < T; ++t) {
    const SceneDescriptor d =
        opts_.visibility == HandVisibility::NoHand ? scenes[static_cast<std::size_t>(t)].without_hand()
                                                   : scenes[static_cast<std::size_t>(t)];
    s.images.row(t) = image_->embed(d).transpose().cast<float>();
  }
  return s;
}

std::vector<SequenceSample> SampleBuilder::build_all(const TrajectorySet& set,
                                                     const std::vector<SceneRecord>& scenes) const {
  std::unordered_map<std::string, const SceneRecord*> by_id;
  for (const auto& r : scenes) by_id[r.id] = &r;
  std::vector<SequenceSample> out;
  out.reserve(set.size());
  for (const auto& tr : set) {
    auto it = by_id.find(tr.id);
    if (it == by_id.end()) throw InvalidArgument("no scene descriptors for sequence " + tr.id);
    out.push_back(build(tr, it->second->frames));
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::mt19937_64& rng,
                                                   bool shuffle) {
  require(batch_size > 0, "batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch_size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  return out;
}

}  // namespace intertraj

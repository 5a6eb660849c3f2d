#pragma once

// Five-term interaction loss on decoded trajectories.

#include <array>
#include <string>

#include "intertraj/hand/hand_model.hpp"
#include "intertraj/trajectory/voxel.hpp"

namespace intertraj {

struct LossWeights {
  double articulation = 1.0;
  double centroid = 1.0;
  double translation = 1.0;
  double rotation = 1.0;
  double contact = 1.0;
};

enum LossTerm { kArticulationTerm, kCentroidTerm, kTranslationTerm, kRotationTerm, kContactTerm, kNumLossTerms };

inline const char* loss_term_name(int i) {
  static const char* names[] = {"articulation", "centroid", "translation", "rotation", "contact"};
  return names[i];
}

template <typename S>
struct LossTargets {
  ad::Tensor<S> pose;      // N x 99, translation in meters
  ad::Tensor<S> contacts;  // N x 778, 0/1
  ad::Tensor<S> centroid;  // N x 3, GT contact centroid (rows without contact are ignored)
  std::vector<Eigen::Index> contact_rows;  // rows that have at least one GT contact
  ad::Tensor<S> shape;     // N x 10
};

template <typename S>
struct LossResult {
  ad::Var<S> total;
  std::array<double, kNumLossTerms> terms{};  // unweighted values
};

// Maps the grid box to [-1, 1]^3 per axis.
struct TranslationScaling {
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3::Ones();

  static TranslationScaling from_bounds(const GridBounds& b) {
    return {0.5 * (b.min_xyz + b.max_xyz), 0.5 * (b.max_xyz - b.min_xyz)};
  }
};

// Pose rows with translation in meters -> normalized translation.
template <typename S, typename Derived>
void normalize_translation(Eigen::MatrixBase<Derived>& pose, const TranslationScaling& sc) {
  for (Eigen::Index r = 0; r < pose.rows(); ++r)
    for (int a = 0; a < 3; ++a)
      pose(r, kGlobalTransOffset + a) = static_cast<S>((pose(r, kGlobalTransOffset + a) - sc.center(a)) / sc.half(a));
}

// Decoder pose output (normalized translation) -> pose with translation in meters.
template <typename S>
ad::Var<S> denormalize_pose(ad::Graph<S>& g, const ad::Var<S>& pose, const TranslationScaling& sc) {
  ad::Tensor<S> half(1, 3), center(1, 3);
  for (int a = 0; a < 3; ++a) {
    half(0, a) = static_cast<S>(sc.half(a));
    center(0, a) = static_cast<S>(sc.center(a));
  }
  auto trans = ad::add_row(ad::scale_cols(ad::slice_cols(pose, kGlobalTransOffset, 3), half), g.constant(center));
  return ad::concat_cols(std::vector<ad::Var<S>>{ad::slice_cols(pose, 0, kGlobalTransOffset), trans});
}

// Terms: smooth-L1 on the 90 articulation values; L1 between the
// probability-weighted centroid of the predicted mesh and the GT contact
// centroid (steps with GT contact only); L1 on the reference-frame translation
// and on the global 6D rotation; BCE on the contact logits. With
// use_contact_loss off the BCE term is dropped and the centroid weights are
// detached, so the contact head receives no gradient.
template <typename S>
LossResult<S> interaction_loss(ad::Graph<S>& g, const ad::Var<S>& pose, const ad::Var<S>& logits,
                               const LossTargets<S>& tgt, const HandLayer<S>& hand, const LossWeights& w,
                               bool use_contact_loss) {
  const Eigen::Index n = pose.rows();
  if (pose.cols() != kPoseDims || logits.cols() != kNumVertices || logits.rows() != n || tgt.pose.rows() != n ||
      tgt.contacts.rows() != n || tgt.shape.rows() != n || tgt.centroid.rows() != n)
    throw InvalidArgument("interaction_loss: misaligned prediction and target shapes");
  auto gt_pose = g.constant_ref(tgt.pose);
  std::vector<ad::Var<S>> terms;
  std::vector<S> weights;
  LossResult<S> res;

  auto art = ad::smooth_l1_mean(ad::slice_cols(pose, 0, kArticulationDims), ad::slice_cols(gt_pose, 0, kArticulationDims));
  terms.push_back(art);
  weights.push_back(static_cast<S>(w.articulation));
  res.terms[kArticulationTerm] = art.value()(0, 0);

  if (!tgt.contact_rows.empty() && w.centroid != 0.0) {
    auto sub_pose = ad::gather_rows(pose, tgt.contact_rows);
    ad::Tensor<S> sub_shape(static_cast<Eigen::Index>(tgt.contact_rows.size()), kNumShapeParams);
    ad::Tensor<S> sub_centroid(sub_shape.rows(), 3);
    for (std::size_t i = 0; i < tgt.contact_rows.size(); ++i) {
      sub_shape.row(static_cast<Eigen::Index>(i)) = tgt.shape.row(tgt.contact_rows[i]);
      sub_centroid.row(static_cast<Eigen::Index>(i)) = tgt.centroid.row(tgt.contact_rows[i]);
    }
    auto mesh = hand(g, g.constant(std::move(sub_shape)), sub_pose);
    auto probs = ad::sigmoid(ad::gather_rows(logits, tgt.contact_rows));
    if (!use_contact_loss) probs = ad::detach(probs);
    auto cen = ad::l1_mean(ad::weighted_centroid(mesh.vertices, probs), g.constant(std::move(sub_centroid)));
    terms.push_back(cen);
    weights.push_back(static_cast<S>(w.centroid));
    res.terms[kCentroidTerm] = cen.value()(0, 0);
  }

  auto trans = ad::l1_mean(ad::slice_cols(pose, kGlobalTransOffset, 3), ad::slice_cols(gt_pose, kGlobalTransOffset, 3));
  terms.push_back(trans);
  weights.push_back(static_cast<S>(w.translation));
  res.terms[kTranslationTerm] = trans.value()(0, 0);

  auto rot = ad::l1_mean(ad::slice_cols(pose, kGlobalRotOffset, 6), ad::slice_cols(gt_pose, kGlobalRotOffset, 6));
  terms.push_back(rot);
  weights.push_back(static_cast<S>(w.rotation));
  res.terms[kRotationTerm] = rot.value()(0, 0);

  if (use_contact_loss) {
    auto bce = ad::bce_with_logits_mean(logits, g.constant_ref(tgt.contacts));
    terms.push_back(bce);
    weights.push_back(static_cast<S>(w.contact));
    res.terms[kContactTerm] = bce.value()(0, 0);
  }
  res.total = ad::weighted_sum(terms, weights);
  return res;
}

}  // namespace intertraj

#pragma once

// Differentiable hand layer: shape + pose parameters -> mesh and joints.
//
// Pose rows use the 99-wide layout of HandPoseParams. Bone transforms are
// chained down the kinematic tree with the global rotation/translation at the
// root, so outputs are already in the frame the global transform maps into.

#include <utility>

#include "intertraj/ad/ops_geometry.hpp"
#include "intertraj/hand/rig.hpp"
#include "intertraj/hand/rotation.hpp"

namespace intertraj {

template <typename S>
class HandLayer {
 public:
  using Tensor = ad::Tensor<S>;

  explicit HandLayer(const HandRig& rig = default_rig()) : rig_(&rig) {
    template_ = Eigen::Map<const Eigen::Matrix<double, 1, Eigen::Dynamic>>(rig.template_vertices.data(),
                                                                          rig.template_vertices.size())
                    .template cast<S>();
    shape_basis_ = rig.shape_basis.template cast<S>();
    weights_ = rig.skin_weights.template cast<S>();
    // Joint regression on flattened xyz rows: J_flat = V_flat * kron(R^T, I3).
    regressor_ = Tensor::Zero(kNumVertices * 3, kNumJoints * 3);
    for (int j = 0; j < kNumJoints; ++j)
      for (int v = 0; v < kNumVertices; ++v) {
        const double w = rig.joint_regressor(j, v);
        if (w == 0.0) continue;
        for (int a = 0; a < 3; ++a) regressor_(3 * v + a, 3 * j + a) = static_cast<S>(w);
      }
  }

  struct Output {
    ad::Var<S> vertices;  // N x 2334
    ad::Var<S> joints;    // N x 63
  };

  // shape: N x 10, pose: N x 99.
  Output operator()(ad::Graph<S>& g, const ad::Var<S>& shape, const ad::Var<S>& pose) const {
    if (shape.cols() != kNumShapeParams || pose.cols() != kPoseDims || shape.rows() != pose.rows())
      throw InvalidArgument("HandLayer: expected N x 10 shape and N x 99 pose");
    if (!shape.value().allFinite() || !pose.value().allFinite())
      throw InvalidArgument("HandLayer: non-finite parameters");
    const Eigen::Index n = pose.rows();
    auto rest = ad::add_row(ad::matmul(shape, g.constant_ref(shape_basis_)), g.constant_ref(template_));
    auto rest_joints = ad::matmul(rest, g.constant_ref(regressor_));
    auto joint = [&](int j) { return ad::slice_cols(rest_joints, 3 * j, 3); };

    auto art = ad::reshape(ad::slice_cols(pose, 0, kArticulationDims), n * kNumArticulated, 6);
    auto art_rot = ad::reshape(ad::rot6d_to_rotmat(art), n, 9 * kNumArticulated);
    auto global_rot = ad::rot6d_to_rotmat(ad::slice_cols(pose, kGlobalRotOffset, 6));
    auto global_trans = ad::slice_cols(pose, kGlobalTransOffset, 3);

    std::vector<ad::Var<S>> chain_rot(kNumBones), chain_trans(kNumBones), packed(kNumBones);
    std::vector<ad::Var<S>> pivots(kNumBones);
    for (int b = 0; b < kNumBones; ++b) pivots[b] = joint(b);
    chain_rot[0] = global_rot;
    chain_trans[0] = ad::add(ad::bmv33(global_rot, pivots[0]), global_trans);
    for (int b = 1; b < kNumBones; ++b) {
      const int p = rig_->parents[b];
      auto local = ad::slice_cols(art_rot, 9 * (b - 1), 9);
      chain_rot[b] = ad::bmm33(chain_rot[p], local);
      chain_trans[b] = ad::add(ad::bmv33(chain_rot[p], ad::sub(pivots[b], pivots[p])), chain_trans[p]);
    }
    for (int b = 0; b < kNumBones; ++b)
      packed[b] = ad::pack_rigid(chain_rot[b], ad::sub(chain_trans[b], ad::bmv33(chain_rot[b], pivots[b])));
    auto verts = ad::blend_skin(ad::concat_cols(packed), rest, weights_);
    auto joints = ad::matmul(verts, g.constant_ref(regressor_));
    return {verts, joints};
  }

  const HandRig& rig() const { return *rig_; }

 private:
  const HandRig* rig_;
  Tensor template_;
  Tensor shape_basis_;
  Tensor weights_;
  Tensor regressor_;
};

// Single-frame convenience wrappers (double precision, no gradients).
std::pair<HandMesh, HandJoints> forward_kinematics(const HandShapeParams& shape, const HandPoseParams& pose,
                                                   const HandRig& rig = default_rig());

// v' = R(rot6d) v + trans for every vertex.
HandMesh apply_global(const HandMesh& mesh, const Vec6& rot6d, const Vec3& trans);

// Flattened helpers for batches of frames: rows are 2334- or 63-wide.
Points3 unflatten_points(const Eigen::Ref<const Eigen::Matrix<double, 1, Eigen::Dynamic>>& row);

}  // namespace intertraj

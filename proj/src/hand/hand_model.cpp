#include "intertraj/hand/hand_model.hpp"

namespace intertraj {

Points3 unflatten_points(const Eigen::Ref<const Eigen::Matrix<double, 1, Eigen::Dynamic>>& row) {
  Points3 p(row.size() / 3, 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) = row.segment(3 * i, 3);
  return p;
}

std::pair<HandMesh, HandJoints> forward_kinematics(const HandShapeParams& shape, const HandPoseParams& pose,
                                                   const HandRig& rig) {
  const HandLayer<double> layer(rig);
  ad::Graph<double> g(false, 0, false);
  ad::Tensor<double> s = shape.beta.transpose();
  ad::Tensor<double> p = pose.flat().transpose();
  auto out = layer(g, g.constant(s), g.constant(p));
  HandMesh mesh{unflatten_points(out.vertices.value().row(0)), rig.faces};
  HandJoints joints{unflatten_points(out.joints.value().row(0))};
  return {std::move(mesh), std::move(joints)};
}

HandMesh apply_global(const HandMesh& mesh, const Vec6& rot6d, const Vec3& trans) {
  if (!rot6d.allFinite() || !trans.allFinite()) throw InvalidArgument("apply_global: non-finite transform");
  const Mat3 R = rot6d_to_matrix<double>(rot6d);
  HandMesh out{mesh.vertices, mesh.faces};
  out.vertices = (mesh.vertices * R.transpose()).rowwise() + trans.transpose();
  return out;
}

}  // namespace intertraj

#pragma once

#include <array>
#include <memory>
#include <string>

#include "intertraj/hand/types.hpp"

namespace intertraj {

// Linear-blend-skinning asset with MANO-compatible dimensions.
//
// Bones: 0 is the root (wrist); bone 1 + 3f + s is segment s (0 proximal,
// 2 distal) of finger f (0 thumb ... 4 pinky). Joint j < 16 is the pivot of
// bone j; joints 16..20 are the fingertips.
struct HandRig {
  Points3 template_vertices;                // 778 x 3
  Eigen::MatrixXd joint_regressor;          // 21 x 778, rows sum to 1
  Eigen::MatrixXd skin_weights;             // 778 x 16, rows sum to 1
  std::array<int, kNumBones> parents{};     // parents[0] == -1
  Eigen::MatrixXd shape_basis;              // 10 x (778*3), row-major xyz per vertex
  std::shared_ptr<const Faces> faces;

  // Procedural capsule hand: a palm cylinder plus 15 finger segments.
  static HandRig synthetic();

  // Rig asset file, container kind "RIG ", version 1:
  //   u32 V, J, B, S, F
  //   f64 template[V*3], f64 regressor[J*V], f64 weights[V*B]
  //   i32 parents[B], f64 shape_basis[S*V*3], i32 faces[F*3]
  static HandRig load(const std::string& path);
  void save(const std::string& path) const;

  // Throws FormatError if any dimension or invariant is off.
  void validate() const;

  Points3 shaped_vertices(const HandShapeParams& shape) const;
};

// Default rig used across the library; built once on first use.
const HandRig& default_rig();

}  // namespace intertraj

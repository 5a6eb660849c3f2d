#pragma once

#include <Eigen/Dense>

#include <memory>

namespace intertraj {

inline constexpr int kNumVertices = 778;
inline constexpr int kNumJoints = 21;
inline constexpr int kNumBones = 16;
inline constexpr int kNumShapeParams = 10;
inline constexpr int kNumArticulated = 15;
inline constexpr int kArticulationDims = 6 * kNumArticulated;  // 90
inline constexpr int kGlobalRotOffset = kArticulationDims;      // 90
inline constexpr int kGlobalTransOffset = kGlobalRotOffset + 6;  // 96
inline constexpr int kPoseDims = kGlobalTransOffset + 3;         // 99

template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec6T = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vec3T<double>;
using Vec6 = Vec6T<double>;
using Mat3 = Mat3T<double>;

using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct HandShapeParams {
  Eigen::Matrix<double, kNumShapeParams, 1> beta = Eigen::Matrix<double, kNumShapeParams, 1>::Zero();
};

// Pose packed as one 99-vector: [articulation 15 x 6D | global rot 6D | global trans (m)].
struct HandPoseParams {
  Eigen::Matrix<double, kArticulationDims, 1> articulation;
  Vec6 global_rot6d;
  Vec3 global_trans;

  static HandPoseParams identity() {
    HandPoseParams p;
    for (int j = 0; j < kNumArticulated; ++j) p.articulation.segment<6>(6 * j) << 1, 0, 0, 0, 1, 0;
    p.global_rot6d << 1, 0, 0, 0, 1, 0;
    p.global_trans.setZero();
    return p;
  }

  Eigen::Matrix<double, kPoseDims, 1> flat() const {
    Eigen::Matrix<double, kPoseDims, 1> v;
    v << articulation, global_rot6d, global_trans;
    return v;
  }

  template <typename Derived>
  static HandPoseParams from_flat(const Eigen::MatrixBase<Derived>& v) {
    HandPoseParams p;
    p.articulation = v.template head<kArticulationDims>();
    p.global_rot6d = v.template segment<6>(kGlobalRotOffset);
    p.global_trans = v.template segment<3>(kGlobalTransOffset);
    return p;
  }
};

struct HandMesh {
  Points3 vertices;                    // 778 x 3, meters
  std::shared_ptr<const Faces> faces;  // shared with the rig
};

struct HandJoints {
  Points3 joints;  // 21 x 3, meters; row 0 is the wrist
};

}  // namespace intertraj

#pragma once

#include <cmath>

#include "intertraj/core/error.hpp"
#include "intertraj/hand/types.hpp"

namespace intertraj {

// Gram-Schmidt on the two stacked 3-vectors, third column by cross product.
template <typename Scalar>
Mat3T<Scalar> rot6d_to_matrix(const Vec6T<Scalar>& r) {
  const Vec3T<Scalar> a1 = r.template head<3>(), a2 = r.template tail<3>();
  const Scalar eps = std::is_same_v<Scalar, float> ? Scalar(1e-6) : Scalar(1e-12);
  const Scalar n1 = a1.norm();
  if (!(n1 > eps)) throw InvalidArgument("rot6d: zero-length first column");
  const Vec3T<Scalar> b1 = a1 / n1;
  const Vec3T<Scalar> u2 = a2 - b1.dot(a2) * b1;
  const Scalar n2 = u2.norm();
  if (!(n2 > eps * std::max(Scalar(1), a2.norm()))) throw InvalidArgument("rot6d: parallel columns");
  Mat3T<Scalar> R;
  R.col(0) = b1;
  R.col(1) = u2 / n2;
  R.col(2) = b1.cross(R.col(1));
  return R;
}

// First two columns. Rejects matrices that are not proper rotations.
template <typename Scalar>
Vec6T<Scalar> matrix_to_rot6d(const Mat3T<Scalar>& R, Scalar tol = Scalar(1e-6)) {
  if (!R.allFinite()) throw InvalidArgument("matrix_to_rot6d: non-finite matrix");
  if ((R.transpose() * R - Mat3T<Scalar>::Identity()).norm() > tol || std::abs(R.determinant() - Scalar(1)) > tol)
    throw InvalidArgument("matrix_to_rot6d: input is not a rotation matrix");
  Vec6T<Scalar> r;
  r << R.col(0), R.col(1);
  return r;
}

template <typename Scalar>
Mat3T<Scalar> axis_angle_matrix(const Vec3T<Scalar>& axis, Scalar angle) {
  if (axis.norm() == Scalar(0)) return Mat3T<Scalar>::Identity();
  return Eigen::AngleAxis<Scalar>(angle, axis.normalized()).toRotationMatrix();
}

inline Vec6 identity_rot6d() {
  Vec6 r;
  r << 1, 0, 0, 0, 1, 0;
  return r;
}

}  // namespace intertraj

#pragma once

// Batched small-matrix ops used by the hand layer and its losses. Rotations
// travel as rows of 9 values (row-major 3x3), rigid transforms as rows of 12
// values (row-major 3x4 [R | t]).

#include <algorithm>
#include <cmath>
#include <vector>

#include "intertraj/ad/ops.hpp"

namespace intertraj::ad {

namespace detail {

template <typename S>
using Vec3 = Eigen::Matrix<S, 3, 1>;

template <typename S>
using Mat3 = Eigen::Matrix<S, 3, 3, Eigen::RowMajor>;

template <typename S>
struct GramSchmidt {
  Vec3<S> a1, a2, b1, b2, b3;
  S n1, n2;
};

template <typename S>
GramSchmidt<S> gram_schmidt(const S* x, S eps) {
  GramSchmidt<S> gs;
  gs.a1 = Vec3<S>(x[0], x[1], x[2]);
  gs.a2 = Vec3<S>(x[3], x[4], x[5]);
  gs.n1 = gs.a1.norm();
  if (!(gs.n1 > eps)) throw InvalidArgument("rot6d: zero-length first column");
  gs.b1 = gs.a1 / gs.n1;
  const Vec3<S> u2 = gs.a2 - gs.b1.dot(gs.a2) * gs.b1;
  gs.n2 = u2.norm();
  if (!(gs.n2 > eps * std::max(S(1), gs.a2.norm()))) throw InvalidArgument("rot6d: parallel columns");
  gs.b2 = u2 / gs.n2;
  gs.b3 = gs.b1.cross(gs.b2);
  return gs;
}

}  // namespace detail

// N x 6 (two 3-vectors) -> N x 9 rotation matrices via Gram-Schmidt + cross product.
template <typename S>
Var<S> rot6d_to_rotmat(const Var<S>& x) {
  detail::check(x.cols() == 6, "rot6d_to_rotmat", "expects 6 columns");
  const Eigen::Index n = x.rows();
  const S eps = std::is_same_v<S, float> ? S(1e-6) : S(1e-12);
  Tensor<S> out(n, 9);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto gs = detail::gram_schmidt<S>(x.value().row(r).data(), eps);
    for (int i = 0; i < 3; ++i) {
      out(r, 3 * i + 0) = gs.b1(i);
      out(r, 3 * i + 1) = gs.b2(i);
      out(r, 3 * i + 2) = gs.b3(i);
    }
  }
  return x.graph().emit(std::move(out), {x}, [x, eps](const Tensor<S>& g) {
    auto& gx = x.node()->grad_buffer();
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const auto gs = detail::gram_schmidt<S>(x.value().row(r).data(), eps);
      detail::Vec3<S> g1, g2, g3;
      for (int i = 0; i < 3; ++i) {
        g1(i) = g(r, 3 * i + 0);
        g2(i) = g(r, 3 * i + 1);
        g3(i) = g(r, 3 * i + 2);
      }
      // b3 = b1 x b2
      g1 += gs.b2.cross(g3);
      g2 += g3.cross(gs.b1);
      // b2 = u2 / |u2|
      const detail::Vec3<S> gu2 = (g2 - gs.b2 * gs.b2.dot(g2)) / gs.n2;
      // u2 = a2 - (b1.a2) b1
      const S b1a2 = gs.b1.dot(gs.a2);
      const S b1gu2 = gs.b1.dot(gu2);
      const detail::Vec3<S> ga2 = gu2 - gs.b1 * b1gu2;
      g1 -= b1a2 * gu2 + gs.a2 * b1gu2;
      // b1 = a1 / |a1|
      const detail::Vec3<S> ga1 = (g1 - gs.b1 * gs.b1.dot(g1)) / gs.n1;
      gx.row(r).template head<3>() += ga1.transpose();
      gx.row(r).template tail<3>() += ga2.transpose();
    }
  });
}

// Row-wise 3x3 products C_i = A_i B_i.
template <typename S>
Var<S> bmm33(const Var<S>& a, const Var<S>& b) {
  detail::check(a.cols() == 9 && b.cols() == 9 && a.rows() == b.rows(), "bmm33", "expects matching N x 9");
  const Eigen::Index n = a.rows();
  Tensor<S> out(n, 9);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Map<const detail::Mat3<S>> A(a.value().row(r).data()), B(b.value().row(r).data());
    Eigen::Map<detail::Mat3<S>> C(out.row(r).data());
    C.noalias() = A * B;
  }
  return a.graph().emit(std::move(out), {a, b}, [a, b](const Tensor<S>& g) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      Eigen::Map<const detail::Mat3<S>> A(a.value().row(r).data()), B(b.value().row(r).data()),
          G(g.row(r).data());
      if (a.requires_grad()) {
        Eigen::Map<detail::Mat3<S>> GA(a.node()->grad_buffer().row(r).data());
        GA.noalias() += G * B.transpose();
      }
      if (b.requires_grad()) {
        Eigen::Map<detail::Mat3<S>> GB(b.node()->grad_buffer().row(r).data());
        GB.noalias() += A.transpose() * G;
      }
    }
  });
}

// Row-wise matrix-vector products c_i = A_i v_i; a is N x 9, v is N x 3.
template <typename S>
Var<S> bmv33(const Var<S>& a, const Var<S>& v) {
  detail::check(a.cols() == 9 && v.cols() == 3 && a.rows() == v.rows(), "bmv33", "expects N x 9 and N x 3");
  const Eigen::Index n = a.rows();
  Tensor<S> out(n, 3);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Map<const detail::Mat3<S>> A(a.value().row(r).data());
    out.row(r) = (A * v.value().row(r).transpose()).transpose();
  }
  return a.graph().emit(std::move(out), {a, v}, [a, v](const Tensor<S>& g) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const detail::Vec3<S> gr = g.row(r).transpose();
      if (a.requires_grad()) {
        Eigen::Map<detail::Mat3<S>> GA(a.node()->grad_buffer().row(r).data());
        GA.noalias() += gr * v.value().row(r);
      }
      if (v.requires_grad()) {
        Eigen::Map<const detail::Mat3<S>> A(a.value().row(r).data());
        v.node()->grad_buffer().row(r) += (A.transpose() * gr).transpose();
      }
    }
  });
}

// Packs rotations (N x 9) and translations (N x 3) into N x 12 rows of [R | t].
template <typename S>
Var<S> pack_rigid(const Var<S>& rot, const Var<S>& trans) {
  detail::check(rot.cols() == 9 && trans.cols() == 3 && rot.rows() == trans.rows(), "pack_rigid", "shape");
  const Eigen::Index n = rot.rows();
  Tensor<S> out(n, 12);
  for (Eigen::Index r = 0; r < n; ++r)
    for (int i = 0; i < 3; ++i) {
      out.row(r).segment(4 * i, 3) = rot.value().row(r).segment(3 * i, 3);
      out(r, 4 * i + 3) = trans.value()(r, i);
    }
  return rot.graph().emit(std::move(out), {rot, trans}, [rot, trans](const Tensor<S>& g) {
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (int i = 0; i < 3; ++i) {
        if (rot.requires_grad()) rot.node()->grad_buffer().row(r).segment(3 * i, 3) += g.row(r).segment(4 * i, 3);
        if (trans.requires_grad()) trans.node()->grad_buffer()(r, i) += g(r, 4 * i + 3);
      }
  });
}

// Linear blend skinning. `transforms` is N x (B*12) (per-frame bone transforms),
// `rest` is N x (V*3) rest-pose vertices, `weights` is a constant V x B matrix.
// Returns N x (V*3) posed vertices.
template <typename S>
Var<S> blend_skin(const Var<S>& transforms, const Var<S>& rest, const Tensor<S>& weights) {
  const Eigen::Index n = transforms.rows(), bones = weights.cols(), verts = weights.rows();
  detail::check(transforms.cols() == bones * 12, "blend_skin", "transform width");
  detail::check(rest.rows() == n && rest.cols() == verts * 3, "blend_skin", "rest shape");
  Tensor<S> out(n, verts * 3);
  for (Eigen::Index f = 0; f < n; ++f) {
    Eigen::Map<const Tensor<S>> T(transforms.value().row(f).data(), bones, 12);
    const Tensor<S> M = weights * T;  // V x 12
    for (Eigen::Index v = 0; v < verts; ++v) {
      Eigen::Map<const Eigen::Matrix<S, 3, 4, Eigen::RowMajor>> A(M.row(v).data());
      const detail::Vec3<S> p(rest.value()(f, 3 * v), rest.value()(f, 3 * v + 1), rest.value()(f, 3 * v + 2));
      const detail::Vec3<S> q = A.template leftCols<3>() * p + A.col(3);
      out(f, 3 * v) = q(0);
      out(f, 3 * v + 1) = q(1);
      out(f, 3 * v + 2) = q(2);
    }
  }
  return transforms.graph().emit(std::move(out), {transforms, rest},
                                 [transforms, rest, weights, bones, verts](const Tensor<S>& g) {
    for (Eigen::Index f = 0; f < g.rows(); ++f) {
      Eigen::Map<const Tensor<S>> T(transforms.value().row(f).data(), bones, 12);
      Tensor<S> M;
      if (rest.requires_grad()) M = weights * T;
      Tensor<S> dM(verts, 12);
      for (Eigen::Index v = 0; v < verts; ++v) {
        const detail::Vec3<S> gv(g(f, 3 * v), g(f, 3 * v + 1), g(f, 3 * v + 2));
        const detail::Vec3<S> p(rest.value()(f, 3 * v), rest.value()(f, 3 * v + 1), rest.value()(f, 3 * v + 2));
        Eigen::Map<Eigen::Matrix<S, 3, 4, Eigen::RowMajor>> D(dM.row(v).data());
        D.template leftCols<3>() = gv * p.transpose();
        D.col(3) = gv;
        if (rest.requires_grad()) {
          Eigen::Map<const Eigen::Matrix<S, 3, 4, Eigen::RowMajor>> A(M.row(v).data());
          const detail::Vec3<S> dp = A.template leftCols<3>().transpose() * gv;
          auto& gr = rest.node()->grad_buffer();
          gr(f, 3 * v) += dp(0);
          gr(f, 3 * v + 1) += dp(1);
          gr(f, 3 * v + 2) += dp(2);
        }
      }
      if (transforms.requires_grad()) {
        Eigen::Map<Tensor<S>> GT(transforms.node()->grad_buffer().row(f).data(), bones, 12);
        GT.noalias() += weights.transpose() * dM;
      }
    }
  });
}

// Weighted mean of 3D points per row: x is N x (V*3), w is N x V.
// Rows whose weights sum to (near) zero return the origin with zero gradient.
template <typename S>
Var<S> weighted_centroid(const Var<S>& x, const Var<S>& w) {
  const Eigen::Index n = x.rows(), verts = w.cols();
  detail::check(w.rows() == n && x.cols() == verts * 3, "weighted_centroid", "shape");
  const S tiny = std::is_same_v<S, float> ? S(1e-12) : S(1e-30);
  Tensor<S> out = Tensor<S>::Zero(n, 3);
  Eigen::Matrix<S, Eigen::Dynamic, 1> total(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Map<const Tensor<S>> P(x.value().row(r).data(), verts, 3);
    total(r) = w.value().row(r).sum();
    if (std::abs(total(r)) > tiny) out.row(r) = (w.value().row(r) * P) / total(r);
  }
  Tensor<S> centroid = out;
  return x.graph().emit(std::move(out), {x, w}, [x, w, total, centroid, verts, tiny](const Tensor<S>& g) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      if (!(std::abs(total(r)) > tiny)) continue;
      Eigen::Map<const Tensor<S>> P(x.value().row(r).data(), verts, 3);
      const auto gr = g.row(r);
      if (x.requires_grad()) {
        Eigen::Map<Tensor<S>> GP(x.node()->grad_buffer().row(r).data(), verts, 3);
        GP.noalias() += (w.value().row(r).transpose() / total(r)) * gr;
      }
      if (w.requires_grad()) {
        const Tensor<S> centered = P.rowwise() - centroid.row(r);
        w.node()->grad_buffer().row(r) += ((centered * gr.transpose()) / total(r)).transpose();
      }
    }
  });
}

// ---------------------------------------------------------------------------
// 3D convolution over cubic volumes, kernel 3, padding 1.
// Layout: x is (samples * side^3) x in_channels with voxels in (z, y, x)
// row-major order; weight is (27 * in_channels) x out_channels.

namespace detail {

// Patch rows for one sample, written to dst (row stride 27 * cin, pre-zeroed).
template <typename S>
void im2col3(const S* vol, Eigen::Index side, Eigen::Index cin, Eigen::Index stride, Eigen::Index out_side,
             S* dst) {
  const Eigen::Index width = 27 * cin;
  for (Eigen::Index oz = 0; oz < out_side; ++oz)
    for (int dz = -1; dz <= 1; ++dz) {
      const Eigen::Index iz = oz * stride + dz;
      if (iz < 0 || iz >= side) continue;
      for (Eigen::Index oy = 0; oy < out_side; ++oy)
        for (int dy = -1; dy <= 1; ++dy) {
          const Eigen::Index iy = oy * stride + dy;
          if (iy < 0 || iy >= side) continue;
          const S* line = vol + (iz * side + iy) * side * cin;
          const Eigen::Index k0 = ((dz + 1) * 3 + (dy + 1)) * 3;
          S* row = dst + (oz * out_side + oy) * out_side * width + k0 * cin;
          for (Eigen::Index ox = 0; ox < out_side; ++ox, row += width) {
            const Eigen::Index ix0 = ox * stride - 1;
            const Eigen::Index lo = ix0 < 0 ? 1 : 0, hi = ix0 + 2 >= side ? side - ix0 : 3;
            std::copy(line + (ix0 + lo) * cin, line + (ix0 + hi) * cin, row + lo * cin);
          }
        }
    }
}

template <typename S>
void col2im3(const S* src, Eigen::Index side, Eigen::Index cin, Eigen::Index stride, Eigen::Index out_side,
             S* dvol) {
  const Eigen::Index width = 27 * cin;
  for (Eigen::Index oz = 0; oz < out_side; ++oz)
    for (int dz = -1; dz <= 1; ++dz) {
      const Eigen::Index iz = oz * stride + dz;
      if (iz < 0 || iz >= side) continue;
      for (Eigen::Index oy = 0; oy < out_side; ++oy)
        for (int dy = -1; dy <= 1; ++dy) {
          const Eigen::Index iy = oy * stride + dy;
          if (iy < 0 || iy >= side) continue;
          S* line = dvol + (iz * side + iy) * side * cin;
          const Eigen::Index k0 = ((dz + 1) * 3 + (dy + 1)) * 3;
          const S* row = src + (oz * out_side + oy) * out_side * width + k0 * cin;
          for (Eigen::Index ox = 0; ox < out_side; ++ox, row += width) {
            const Eigen::Index ix0 = ox * stride - 1;
            const Eigen::Index lo = ix0 < 0 ? 1 : 0, hi = ix0 + 2 >= side ? side - ix0 : 3;
            S* out = line + (ix0 + lo) * cin;
            const S* in = row + lo * cin;
            for (Eigen::Index j = 0; j < (hi - lo) * cin; ++j) out[j] += in[j];
          }
        }
    }
}

// Samples per GEMM in conv3d.
inline constexpr Eigen::Index kConvChunk = 8;

}  // namespace detail

inline Eigen::Index conv3_output_side(Eigen::Index side, Eigen::Index stride) { return (side - 1) / stride + 1; }

template <typename S>
Var<S> conv3d(const Var<S>& x, const Var<S>& weight, const Var<S>& bias, Eigen::Index side, Eigen::Index stride) {
  const Eigen::Index cin = x.cols(), cout = weight.cols();
  const Eigen::Index in_vox = side * side * side;
  detail::check(weight.rows() == 27 * cin, "conv3d", "weight rows must be 27 * in_channels");
  detail::check(bias.rows() == 1 && bias.cols() == cout, "conv3d", "bias shape");
  detail::check(x.rows() % in_vox == 0, "conv3d", "rows must be a multiple of side^3");
  const Eigen::Index samples = x.rows() / in_vox;
  const Eigen::Index out_side = conv3_output_side(side, stride);
  const Eigen::Index out_vox = out_side * out_side * out_side;
  Tensor<S> out(samples * out_vox, cout);
  Tensor<S> patch;
  const auto fill = [x, side, cin, stride, out_side, in_vox, out_vox](Tensor<S>& p, Eigen::Index s0,
                                                                       Eigen::Index count) {
    p.setZero(count * out_vox, 27 * cin);
    for (Eigen::Index s = 0; s < count; ++s)
      detail::im2col3(x.value().row((s0 + s) * in_vox).data(), side, cin, stride, out_side,
                      p.data() + s * out_vox * 27 * cin);
  };
  for (Eigen::Index s0 = 0; s0 < samples; s0 += detail::kConvChunk) {
    const Eigen::Index count = std::min(detail::kConvChunk, samples - s0);
    fill(patch, s0, count);
    out.middleRows(s0 * out_vox, count * out_vox).noalias() = patch * weight.value();
  }
  out.rowwise() += bias.value().row(0);
  return x.graph().emit(std::move(out), {x, weight, bias},
                        [x, weight, bias, side, stride, samples, in_vox, out_side, out_vox, cin, fill](const Tensor<S>& g) {
    if (bias.requires_grad()) bias.node()->grad_buffer() += g.colwise().sum();
    Tensor<S> patch, dpatch;
    for (Eigen::Index s0 = 0; s0 < samples; s0 += detail::kConvChunk) {
      const Eigen::Index count = std::min(detail::kConvChunk, samples - s0);
      const auto gs = g.middleRows(s0 * out_vox, count * out_vox);
      if (weight.requires_grad()) {
        fill(patch, s0, count);
        weight.node()->grad_buffer().noalias() += patch.transpose() * gs;
      }
      if (x.requires_grad()) {
        dpatch.noalias() = gs * weight.value().transpose();
        for (Eigen::Index s = 0; s < count; ++s)
          detail::col2im3(dpatch.data() + s * out_vox * 27 * cin, side, cin, stride, out_side,
                          x.node()->grad_buffer().row((s0 + s) * in_vox).data());
      }
    }
  });
}

// Average of each consecutive block of `group` rows: (n*group x c) -> (n x c).
template <typename S>
Var<S> group_mean_rows(const Var<S>& x, Eigen::Index group) {
  detail::check(group > 0 && x.rows() % group == 0, "group_mean_rows", "group size");
  const Eigen::Index n = x.rows() / group;
  Tensor<S> out(n, x.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = x.value().middleRows(i * group, group).colwise().mean();
  return x.graph().emit(std::move(out), {x}, [x, n, group](const Tensor<S>& g) {
    if (!x.requires_grad()) return;
    auto& gx = x.node()->grad_buffer();
    const S inv = S(1) / static_cast<S>(group);
    for (Eigen::Index i = 0; i < n; ++i) gx.middleRows(i * group, group).rowwise() += g.row(i) * inv;
  });
}

}  // namespace intertraj::ad

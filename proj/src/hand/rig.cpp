#include "intertraj/hand/rig.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "intertraj/core/binary_io.hpp"
#include "intertraj/core/error.hpp"

namespace intertraj {

namespace {

constexpr int kPalmRings = 11;
constexpr int kPalmRingVerts = 16;
constexpr int kFingerRings = 5;
constexpr int kFingerRingVerts = 8;
constexpr int kPalmVerts = kPalmRings * kPalmRingVerts + 2;              // 178
constexpr int kSegmentVerts = kFingerRings * kFingerRingVerts;          // 40
static_assert(kPalmVerts + kNumArticulated * kSegmentVerts == kNumVertices);

constexpr std::uint32_t kRigVersion = 1;

// Generative parameters of the capsule hand; shape basis rows are the
// displacement caused by a unit step in each of them.
struct Proportions {
  double scale = 1.0;
  double palm_width = 0.040;   // half width at the knuckles
  double palm_length = 0.090;
  double thickness = 0.013;    // half thickness of the palm
  std::array<double, 5> finger_scale{1.0, 1.0, 1.0, 1.0, 1.0};
  double thumb_spread = 0.0;   // radians about the palm normal
};

struct FingerSpec {
  Vec3 base;
  Vec3 dir;
  std::array<double, 3> length;
  std::array<double, 4> radius;
};

std::array<FingerSpec, 5> finger_specs(const Proportions& p) {
  const double w = p.palm_width / 0.040;
  const double L = p.palm_length;
  std::array<FingerSpec, 5> f;
  const double spread = p.thumb_spread;
  Vec3 thumb_dir(-0.75 * std::cos(spread) - 0.66 * std::sin(spread), -0.75 * std::sin(spread) + 0.66 * std::cos(spread),
                 -0.10);
  f[0] = {Vec3(-0.034 * w, 0.28 * L, -0.004), thumb_dir.normalized(), {0.036, 0.030, 0.025}, {0.011, 0.010, 0.009, 0.008}};
  f[1] = {Vec3(-0.027 * w, L, 0.0), Vec3(-0.08, 1.0, 0.0).normalized(), {0.042, 0.025, 0.020}, {0.0095, 0.0088, 0.0080, 0.0072}};
  f[2] = {Vec3(-0.009 * w, L + 0.002, 0.0), Vec3(0.0, 1.0, 0.0), {0.046, 0.028, 0.022}, {0.0098, 0.0090, 0.0082, 0.0074}};
  f[3] = {Vec3(0.010 * w, L, 0.0), Vec3(0.06, 1.0, 0.0).normalized(), {0.043, 0.027, 0.021}, {0.0092, 0.0085, 0.0078, 0.0070}};
  f[4] = {Vec3(0.028 * w, L - 0.006, 0.0), Vec3(0.15, 1.0, 0.0).normalized(), {0.033, 0.021, 0.018}, {0.0082, 0.0076, 0.0070, 0.0064}};
  for (int i = 0; i < 5; ++i)
    for (auto& l : f[i].length) l *= p.finger_scale[i];
  return f;
}

double ring_fraction(int ring) { return 0.1 + 0.2 * ring; }

Points3 build_vertices(const Proportions& p) {
  Points3 v(kNumVertices, 3);
  int idx = 0;
  for (int r = 0; r < kPalmRings; ++r) {
    const double t = static_cast<double>(r) / (kPalmRings - 1);
    const double y = p.palm_length * t;
    const double hw = p.palm_width * (0.8 + 0.2 * t);
    for (int k = 0; k < kPalmRingVerts; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / kPalmRingVerts;
      v.row(idx++) << hw * std::cos(phi), y, p.thickness * std::sin(phi);
    }
  }
  v.row(idx++) << 0.0, 0.0, 0.0;
  v.row(idx++) << 0.0, p.palm_length, 0.0;

  const auto fingers = finger_specs(p);
  for (const auto& f : fingers) {
    Vec3 u = f.dir.cross(Vec3::UnitZ());
    if (u.norm() < 1e-6) u = Vec3::UnitX();
    u.normalize();
    const Vec3 w = u.cross(f.dir).normalized();
    Vec3 start = f.base;
    for (int s = 0; s < 3; ++s) {
      for (int r = 0; r < kFingerRings; ++r) {
        const double a = ring_fraction(r);
        const Vec3 c = start + a * f.length[s] * f.dir;
        const double rad = (1.0 - a) * f.radius[s] + a * f.radius[s + 1];
        for (int k = 0; k < kFingerRingVerts; ++k) {
          const double phi = 2.0 * std::numbers::pi * k / kFingerRingVerts;
          v.row(idx++) = (c + rad * (std::cos(phi) * u + std::sin(phi) * w)).transpose();
        }
      }
      start += f.length[s] * f.dir;
    }
  }
  return v * p.scale;
}

int segment_first_vertex(int finger, int segment) { return kPalmVerts + (3 * finger + segment) * kSegmentVerts; }

// Counter-clockwise seen from outside, so face normals point outward.
Faces build_faces() {
  std::vector<Eigen::Vector3i> tris;
  auto ring_band = [&](int a0, int b0, int n) {
    for (int k = 0; k < n; ++k) {
      const int k1 = (k + 1) % n;
      tris.emplace_back(a0 + k, b0 + k, b0 + k1);
      tris.emplace_back(a0 + k, b0 + k1, a0 + k1);
    }
  };
  for (int r = 0; r + 1 < kPalmRings; ++r) ring_band(r * kPalmRingVerts, (r + 1) * kPalmRingVerts, kPalmRingVerts);
  const int bottom = kPalmRings * kPalmRingVerts, top = bottom + 1;
  const int last_ring = (kPalmRings - 1) * kPalmRingVerts;
  for (int k = 0; k < kPalmRingVerts; ++k) {
    const int k1 = (k + 1) % kPalmRingVerts;
    tris.emplace_back(bottom, k, k1);
    tris.emplace_back(top, last_ring + k1, last_ring + k);
  }
  for (int f = 0; f < 5; ++f) {
    for (int s = 0; s < 3; ++s) {
      const int base = segment_first_vertex(f, s);
      for (int r = 0; r + 1 < kFingerRings; ++r)
        ring_band(base + r * kFingerRingVerts, base + (r + 1) * kFingerRingVerts, kFingerRingVerts);
      if (s < 2) ring_band(base + (kFingerRings - 1) * kFingerRingVerts, segment_first_vertex(f, s + 1), kFingerRingVerts);
    }
    const int tip = segment_first_vertex(f, 2) + (kFingerRings - 1) * kFingerRingVerts;
    for (int k = 1; k + 1 < kFingerRingVerts; ++k) tris.emplace_back(tip, tip + k + 1, tip + k);
  }
  Faces faces(static_cast<Eigen::Index>(tris.size()), 3);
  for (std::size_t i = 0; i < tris.size(); ++i) faces.row(static_cast<Eigen::Index>(i)) = tris[i].transpose();
  return faces;
}

Eigen::MatrixXd build_regressor() {
  Eigen::MatrixXd reg = Eigen::MatrixXd::Zero(kNumJoints, kNumVertices);
  auto ring_weight = [&](int joint, int first, int count, double w) {
    for (int k = 0; k < count; ++k) reg(joint, first + k) += w / count;
  };
  ring_weight(0, 0, kPalmRingVerts, 1.0);  // wrist: base ring of the palm is centered on the origin
  for (int f = 0; f < 5; ++f) {
    for (int s = 0; s < 3; ++s) {
      const int joint = 1 + 3 * f + s;
      const int first = segment_first_vertex(f, s);
      // Rings at fractions 0.1 and 0.3 extrapolate exactly to the segment start.
      ring_weight(joint, first, kFingerRingVerts, 1.5);
      ring_weight(joint, first + kFingerRingVerts, kFingerRingVerts, -0.5);
    }
    const int first = segment_first_vertex(f, 2);
    ring_weight(16 + f, first + 4 * kFingerRingVerts, kFingerRingVerts, 1.5);
    ring_weight(16 + f, first + 3 * kFingerRingVerts, kFingerRingVerts, -0.5);
  }
  return reg;
}

Eigen::MatrixXd build_weights(const std::array<int, kNumBones>& parents) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(kNumVertices, kNumBones);
  for (int i = 0; i < kPalmVerts; ++i) w(i, 0) = 1.0;
  const std::array<double, kFingerRings> self{0.5, 0.85, 1.0, 1.0, 1.0};
  for (int f = 0; f < 5; ++f)
    for (int s = 0; s < 3; ++s) {
      const int bone = 1 + 3 * f + s;
      const int first = segment_first_vertex(f, s);
      for (int r = 0; r < kFingerRings; ++r)
        for (int k = 0; k < kFingerRingVerts; ++k) {
          const int vi = first + r * kFingerRingVerts + k;
          w(vi, bone) = self[r];
          w(vi, parents[bone]) += 1.0 - self[r];
        }
    }
  return w;
}

}  // namespace

HandRig HandRig::synthetic() {
  HandRig rig;
  rig.parents[0] = -1;
  for (int f = 0; f < 5; ++f)
    for (int s = 0; s < 3; ++s) rig.parents[1 + 3 * f + s] = s == 0 ? 0 : 3 * f + s;
  const Proportions base;
  rig.template_vertices = build_vertices(base);
  rig.joint_regressor = build_regressor();
  rig.skin_weights = build_weights(rig.parents);
  rig.faces = std::make_shared<const Faces>(build_faces());

  rig.shape_basis.resize(kNumShapeParams, kNumVertices * 3);
  auto put = [&](int k, const Proportions& p) {
    const Points3 d = build_vertices(p) - rig.template_vertices;
    rig.shape_basis.row(k) = Eigen::Map<const Eigen::RowVectorXd>(d.data(), d.size());
  };
  {
    Proportions p = base; p.scale = 1.04; put(0, p);
  }
  {
    Proportions p = base; p.palm_width += 0.004; put(1, p);
  }
  {
    Proportions p = base; p.palm_length += 0.006; put(2, p);
  }
  {
    Proportions p = base; p.thickness += 0.002; put(3, p);
  }
  for (int f = 0; f < 5; ++f) {
    Proportions p = base;
    p.finger_scale[f] = 1.08;
    put(4 + f, p);
  }
  {
    Proportions p = base; p.thumb_spread = 0.08; put(9, p);
  }
  rig.validate();
  return rig;
}

void HandRig::validate() const {
  auto fail = [](const std::string& m) { throw FormatError("hand rig: " + m); };
  if (template_vertices.rows() != kNumVertices) fail("template must have 778 vertices");
  if (joint_regressor.rows() != kNumJoints || joint_regressor.cols() != kNumVertices) fail("regressor must be 21x778");
  if (skin_weights.rows() != kNumVertices || skin_weights.cols() != kNumBones) fail("weights must be 778x16");
  if (shape_basis.rows() != kNumShapeParams || shape_basis.cols() != kNumVertices * 3) fail("shape basis must be 10x2334");
  if (!faces || faces->rows() == 0) fail("no faces");
  if (faces->minCoeff() < 0 || faces->maxCoeff() >= kNumVertices) fail("face index out of range");
  if (parents[0] != -1) fail("bone 0 must be the root");
  for (int b = 1; b < kNumBones; ++b)
    if (parents[b] < 0 || parents[b] >= b) fail("parents must precede children");
  if (!template_vertices.allFinite() || !joint_regressor.allFinite() || !skin_weights.allFinite() ||
      !shape_basis.allFinite())
    fail("non-finite values");
  if (((skin_weights.rowwise().sum().array() - 1.0).abs() > 1e-9).any()) fail("skin weights must sum to 1");
  if (((joint_regressor.rowwise().sum().array() - 1.0).abs() > 1e-9).any()) fail("regressor rows must sum to 1");
}

Points3 HandRig::shaped_vertices(const HandShapeParams& shape) const {
  Eigen::RowVectorXd flat = shape.beta.transpose() * shape_basis;
  Points3 v = template_vertices;
  v += Eigen::Map<const Points3>(flat.data(), kNumVertices, 3);
  return v;
}

void HandRig::save(const std::string& path) const {
  validate();
  ByteWriter w;
  w.u32(kNumVertices);
  w.u32(kNumJoints);
  w.u32(kNumBones);
  w.u32(kNumShapeParams);
  w.u32(static_cast<std::uint32_t>(faces->rows()));
  w.f64s({template_vertices.data(), static_cast<std::size_t>(template_vertices.size())});
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> reg = joint_regressor;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wts = skin_weights;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> shp = shape_basis;
  w.f64s({reg.data(), static_cast<std::size_t>(reg.size())});
  w.f64s({wts.data(), static_cast<std::size_t>(wts.size())});
  for (int p : parents) w.i32(p);
  w.f64s({shp.data(), static_cast<std::size_t>(shp.size())});
  for (Eigen::Index i = 0; i < faces->size(); ++i) w.i32(faces->data()[i]);
  write_container(path, "RIG ", kRigVersion, w.buffer());
}

HandRig HandRig::load(const std::string& path) {
  const std::string payload = read_container(path, "RIG ", kRigVersion);
  ByteReader r(payload);
  const auto nv = r.u32(), nj = r.u32(), nb = r.u32(), ns = r.u32(), nf = r.u32();
  if (nv != kNumVertices || nj != kNumJoints || nb != kNumBones || ns != kNumShapeParams)
    throw FormatError(path + ": rig dimensions do not match 778/21/16/10");
  HandRig rig;
  rig.template_vertices.resize(nv, 3);
  r.f64s({rig.template_vertices.data(), static_cast<std::size_t>(rig.template_vertices.size())});
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> reg(nj, nv), wts(nv, nb), shp(ns, nv * 3);
  r.f64s({reg.data(), static_cast<std::size_t>(reg.size())});
  r.f64s({wts.data(), static_cast<std::size_t>(wts.size())});
  for (auto& p : rig.parents) p = r.i32();
  r.f64s({shp.data(), static_cast<std::size_t>(shp.size())});
  Faces faces(nf, 3);
  for (Eigen::Index i = 0; i < faces.size(); ++i) faces.data()[i] = r.i32();
  if (!r.done()) throw FormatError(path + ": trailing bytes in rig payload");
  rig.joint_regressor = reg;
  rig.skin_weights = wts;
  rig.shape_basis = shp;
  rig.faces = std::make_shared<const Faces>(std::move(faces));
  rig.validate();
  return rig;
}

const HandRig& default_rig() {
  static const HandRig rig = HandRig::synthetic();
  return rig;
}

}  // namespace intertraj

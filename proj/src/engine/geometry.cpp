#include "intertraj/engine/geometry.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "intertraj/core/binary_io.hpp"
#include "intertraj/hand/rotation.hpp"

namespace intertraj {

void Rigid::validate(double tol) const {
  if (!R.allFinite() || !t.allFinite()) throw InvalidArgument("extrinsics: non-finite transform");
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > tol || std::abs(R.determinant() - 1.0) > tol)
    throw InvalidArgument("extrinsics: rotation is not orthonormal");
}

void CameraParams::validate() const {
  if (!K.allFinite() || K(0, 0) <= 0.0 || K(1, 1) <= 0.0)
    throw InvalidArgument("camera intrinsics: focal lengths must be positive");
  for (const auto& e : extrinsics) e.validate();
}

int Mask2D::count() const {
  int n = 0;
  for (auto p : pixels) n += p != 0;
  return n;
}

Eigen::Vector2d project(const Mat3& K, const Vec3& p) {
  return {K(0, 0) * p.x() / p.z() + K(0, 1) * p.y() / p.z() + K(0, 2), K(1, 1) * p.y() / p.z() + K(1, 2)};
}

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

void check_in_front(const Points3& v) {
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    if (!(v(i, 2) > 0.0)) throw InvalidArgument("mesh vertex " + std::to_string(i) + " is not in front of the camera");
}

}  // namespace

Mask2D render_hand_mask(const Points3& vertices, const Faces& faces, const Mat3& K, int height, int width,
                        DepthBuffer* depth) {
  require(height > 0 && width > 0, "render_hand_mask: image size must be positive");
  check_in_front(vertices);
  Mask2D mask(height, width);
  DepthBuffer zb{height, width,
                 std::vector<double>(static_cast<std::size_t>(height) * width, std::numeric_limits<double>::infinity())};
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    const Vec3 a = vertices.row(faces(f, 0)).transpose(), b = vertices.row(faces(f, 1)).transpose(),
               c = vertices.row(faces(f, 2)).transpose();
    // Camera at the origin: front-facing when the normal points back at it.
    if ((b - a).cross(c - a).dot(a) >= 0.0) continue;
    const Eigen::Vector2d p[3] = {project(K, a), project(K, b), project(K, c)};
    const double z[3] = {a.z(), b.z(), c.z()};
    const double area = cross2(p[1] - p[0], p[2] - p[0]);
    if (std::abs(area) < 1e-12) continue;
    const double lo_u = std::min({p[0].x(), p[1].x(), p[2].x()}), hi_u = std::max({p[0].x(), p[1].x(), p[2].x()});
    const double lo_v = std::min({p[0].y(), p[1].y(), p[2].y()}), hi_v = std::max({p[0].y(), p[1].y(), p[2].y()});
    const int x0 = std::max(0, static_cast<int>(std::floor(lo_u - 0.5)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(hi_u - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(lo_v - 0.5)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(hi_v - 0.5)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d q(x + 0.5, y + 0.5);
        double w[3];
        for (int i = 0; i < 3; ++i) w[i] = cross2(p[(i + 2) % 3] - p[(i + 1) % 3], q - p[(i + 1) % 3]) / area;
        if (w[0] < 0.0 || w[1] < 0.0 || w[2] < 0.0) continue;
        const double inv_z = w[0] / z[0] + w[1] / z[1] + w[2] / z[2];
        const double d = 1.0 / inv_z;
        auto& slot = zb.depth[static_cast<std::size_t>(y) * width + x];
        if (d < slot) slot = d;
        mask.at(y, x) = 1;
      }
  }
  if (depth) *depth = std::move(zb);
  return mask;
}

Mask2D contact_region_2d(const Mask2D& hand, const Mask2D& object, double boundary_sigma, std::uint64_t seed) {
  require(hand.height == object.height && hand.width == object.width, "contact_region_2d: mask sizes differ");
  require(boundary_sigma >= 0.0, "contact_region_2d: sigma must be non-negative");
  Mask2D both(hand.height, hand.width);
  for (std::size_t i = 0; i < both.pixels.size(); ++i) both.pixels[i] = hand.pixels[i] && object.pixels[i];
  Mask2D out = both;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, boundary_sigma > 0.0 ? boundary_sigma : 1.0);
  const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
  for (int y = 0; y < both.height; ++y)
    for (int x = 0; x < both.width; ++x) {
      if (!both.at(y, x)) continue;
      bool boundary = false;
      for (int k = 0; k < 4; ++k) {
        const int yy = y + dy[k], xx = x + dx[k];
        if (!both.inside(yy, xx) || !both.at(yy, xx)) boundary = true;
      }
      if (!boundary) continue;
      const double r = boundary_sigma > 0.0 ? std::abs(normal(rng)) : 0.0;
      const int ri = static_cast<int>(std::floor(r));
      for (int oy = -ri; oy <= ri; ++oy)
        for (int ox = -ri; ox <= ri; ++ox)
          if (double(oy * oy + ox * ox) <= r * r && out.inside(y + oy, x + ox)) out.at(y + oy, x + ox) = 1;
    }
  return out;
}

ContactMap backproject_contact(const Mask2D& region, const Points3& vertices, const Faces& faces, const Mat3& K,
                               double eps) {
  require(vertices.rows() == kNumVertices, "backproject_contact: expected a 778-vertex mesh");
  DepthBuffer zb;
  render_hand_mask(vertices, faces, K, region.height, region.width, &zb);
  ContactMap out;
  for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
    const Vec3 v = vertices.row(i).transpose();
    const Eigen::Vector2d uv = project(K, v);
    const int x = static_cast<int>(std::floor(uv.x())), y = static_cast<int>(std::floor(uv.y()));
    if (!region.inside(y, x) || !region.at(y, x)) continue;
    if (v.z() <= zb.at(y, x) + eps) out.mask(i) = 1;
  }
  return out;
}

Rigid reference_transform(const CameraParams& cam, int t) {
  require(t >= 0 && t < static_cast<int>(cam.extrinsics.size()), "reference_transform: frame out of range");
  const Rigid& e0 = cam.extrinsics.front();
  const Rigid& et = cam.extrinsics[static_cast<std::size_t>(t)];
  e0.validate();
  et.validate();
  return e0 * et.inverse();
}

Points3 to_reference_frame(const Points3& vertices, const CameraParams& cam, int t) {
  const Rigid a = reference_transform(cam, t);
  Points3 out(vertices.rows(), 3);
  for (Eigen::Index i = 0; i < vertices.rows(); ++i) out.row(i) = a.apply(vertices.row(i).transpose()).transpose();
  return out;
}

InteractionTrajectory to_reference_frame(const InteractionTrajectory& camera_frames, const CameraParams& cam) {
  require(static_cast<int>(cam.extrinsics.size()) == camera_frames.horizon(),
          "to_reference_frame: one extrinsic per step is required");
  InteractionTrajectory out = camera_frames;
  for (int t = 0; t < out.horizon(); ++t) {
    const Rigid a = reference_transform(cam, t);
    HandPoseParams p = out.pose(t);
    const Mat3 R = a.R * rot6d_to_matrix<double>(p.global_rot6d);
    p.global_rot6d = matrix_to_rot6d<double>(R, 1e-6);
    p.global_trans = a.R * p.global_trans + a.t;
    out.set_pose(t, p);
  }
  return out;
}

void save_mask(const std::string& path, const Mask2D& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << "P4\n" << mask.width << " " << mask.height << "\n";
  const int stride = (mask.width + 7) / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(stride));
  for (int y = 0; y < mask.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(y, x)) row[static_cast<std::size_t>(x / 8)] |= static_cast<unsigned char>(0x80 >> (x % 8));
    out.write(reinterpret_cast<const char*>(row.data()), stride);
  }
}

Mask2D load_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read mask " + path);
  std::string magic;
  in >> magic;
  if (magic != "P4") throw FormatError(path + ": not a binary PBM file");
  const auto skip = [&in] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  int w = 0, h = 0;
  skip();
  in >> w;
  skip();
  in >> h;
  if (!in || w <= 0 || h <= 0) throw FormatError(path + ": bad PBM header");
  in.get();
  Mask2D m(h, w);
  const int stride = (w + 7) / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(stride));
  for (int y = 0; y < h; ++y) {
    if (!in.read(reinterpret_cast<char*>(row.data()), stride)) throw FormatError(path + ": truncated PBM data");
    for (int x = 0; x < w; ++x) m.at(y, x) = (row[static_cast<std::size_t>(x / 8)] >> (7 - x % 8)) & 1;
  }
  return m;
}

void save_frames(const std::string& path, const FrameBundle& frames) {
  require(frames.camera.extrinsics.size() == frames.vertices.size(), "save_frames: one extrinsic per frame");
  ByteWriter w;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) w.f64(frames.camera.K(r, c));
  w.u32(static_cast<std::uint32_t>(frames.vertices.size()));
  for (std::size_t f = 0; f < frames.vertices.size(); ++f) {
    const auto& e = frames.camera.extrinsics[f];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) w.f64(e.R(r, c));
    for (int a = 0; a < 3; ++a) w.f64(e.t(a));
    require(frames.vertices[f].rows() == kNumVertices, "save_frames: expected 778 vertices per frame");
    w.f64s({frames.vertices[f].data(), static_cast<std::size_t>(frames.vertices[f].size())});
  }
  write_container(path, "FRMS", 1, w.buffer());
}

FrameBundle load_frames(const std::string& path) {
  const std::string payload = read_container(path, "FRMS", 1);
  ByteReader r(payload);
  FrameBundle out;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) out.camera.K(i, c) = r.f64();
  const auto n = r.u32();
  for (std::uint32_t f = 0; f < n; ++f) {
    Rigid e;
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) e.R(i, c) = r.f64();
    for (int a = 0; a < 3; ++a) e.t(a) = r.f64();
    out.camera.extrinsics.push_back(e);
    Points3 v(kNumVertices, 3);
    r.f64s({v.data(), static_cast<std::size_t>(v.size())});
    out.vertices.push_back(std::move(v));
  }
  if (!r.done()) throw FormatError(path + ": trailing bytes in frame bundle");
  out.camera.validate();
  return out;
}

InteractionTrajectory annotate_clip(const InteractionTrajectory& camera_frames, const FrameBundle& frames,
                                    const std::vector<Mask2D>& object_masks, const Faces& faces,
                                    double boundary_sigma, std::uint64_t seed) {
  const int T = camera_frames.horizon();
  require(static_cast<int>(frames.vertices.size()) == T && static_cast<int>(object_masks.size()) == T,
          "annotate_clip: one mesh and one object mask per step");
  frames.camera.validate();
  InteractionTrajectory traj = camera_frames;
  for (int t = 0; t < T; ++t) {
    const auto& obj = object_masks[static_cast<std::size_t>(t)];
    const auto& verts = frames.vertices[static_cast<std::size_t>(t)];
    const Mask2D hand = render_hand_mask(verts, faces, frames.camera.K, obj.height, obj.width);
    const Mask2D region = contact_region_2d(hand, obj, boundary_sigma, seed + static_cast<std::uint64_t>(t));
    traj.set_contact(t, backproject_contact(region, verts, faces, frames.camera.K));
  }
  return to_reference_frame(traj, frames.camera);
}

}  // namespace intertraj

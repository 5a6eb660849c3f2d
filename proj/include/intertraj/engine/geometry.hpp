#pragma once

// Annotation geometry: hand-mask rendering, 2D contact regions, back-projection
// of a region onto the mesh, and the change to the first camera's frame.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "intertraj/hand/types.hpp"
#include "intertraj/trajectory/trajectory.hpp"

namespace intertraj {

// Camera-from-world rigid transform: x_cam = R x_world + t.
struct Rigid {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return R * x + t; }
  Rigid inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
  // (a * b)(x) = a(b(x))
  friend Rigid operator*(const Rigid& a, const Rigid& b) { return {a.R * b.R, a.R * b.t + a.t}; }
  // Throws InvalidArgument unless R is orthonormal with determinant +1.
  void validate(double tol = 1e-6) const;
};

struct CameraParams {
  Mat3 K = Mat3::Identity();       // pixels
  std::vector<Rigid> extrinsics;   // one per frame

  void validate() const;
};

struct Mask2D {
  int height = 0, width = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 0/1

  Mask2D() = default;
  Mask2D(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool inside(int y, int x) const { return y >= 0 && x >= 0 && y < height && x < width; }
  int count() const;
  bool operator==(const Mask2D&) const = default;
};

// Per-pixel nearest depth; +inf where nothing is drawn.
struct DepthBuffer {
  int height = 0, width = 0;
  std::vector<double> depth;

  double at(int y, int x) const { return depth[static_cast<std::size_t>(y) * width + x]; }
};

// Pinhole projection (u, v) in pixels; pixel (x, y) covers [x, x+1) x [y, y+1).
Eigen::Vector2d project(const Mat3& K, const Vec3& p);

// Draws every front-facing triangle (counter-clockwise on screen, i.e.
// outward normals pointing toward the camera) whose interior covers a pixel
// center, keeping the nearest perspective-correct depth. Throws
// InvalidArgument when a vertex has z <= 0.
Mask2D render_hand_mask(const Points3& vertices, const Faces& faces, const Mat3& K, int height, int width,
                        DepthBuffer* depth = nullptr);

// Intersection of the two masks, grown at its boundary: every boundary pixel
// paints a disc of radius |N(0, sigma)| pixels. Always contains the raw
// intersection.
Mask2D contact_region_2d(const Mask2D& hand, const Mask2D& object, double boundary_sigma, std::uint64_t seed);

// Vertex is in contact iff its pixel lies in the region and its depth is
// within `eps` of the z-buffer there (visible).
inline constexpr double kVisibilityEpsilon = 0.005;
ContactMap backproject_contact(const Mask2D& region, const Points3& vertices, const Faces& faces, const Mat3& K,
                               double eps = kVisibilityEpsilon);

// Maps camera-t coordinates to camera-0 coordinates: E_0 * E_t^-1.
Rigid reference_transform(const CameraParams& cam, int t);

// Applies reference_transform to vertices seen by camera t.
Points3 to_reference_frame(const Points3& vertices, const CameraParams& cam, int t);

// Rewrites the global rotation/translation of every step of a trajectory
// given in per-frame camera coordinates into the reference frame.
InteractionTrajectory to_reference_frame(const InteractionTrajectory& camera_frames, const CameraParams& cam);

// Binary PBM (P4) mask files.
void save_mask(const std::string& path, const Mask2D& mask);
Mask2D load_mask(const std::string& path);

// Per-frame camera-frame meshes with the camera, kind "FRMS", version 1:
//   f64 K[9]; u32 frames; per frame: f64 R[9], t[3], f64 vertices[778*3]
struct FrameBundle {
  CameraParams camera;
  std::vector<Points3> vertices;  // camera-t coordinates
};
void save_frames(const std::string& path, const FrameBundle& frames);
FrameBundle load_frames(const std::string& path);

// Full annotation of one clip: per-frame hand masks, contact regions against
// the object masks, back-projected contact maps, and poses moved to the
// reference frame.
InteractionTrajectory annotate_clip(const InteractionTrajectory& camera_frames, const FrameBundle& frames,
                                    const std::vector<Mask2D>& object_masks, const Faces& faces,
                                    double boundary_sigma, std::uint64_t seed);

}  // namespace intertraj

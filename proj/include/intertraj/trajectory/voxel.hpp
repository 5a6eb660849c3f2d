#pragma once

#include <array>
#include <optional>

#include "intertraj/trajectory/trajectory.hpp"

namespace intertraj {

inline constexpr int kGridSide = 16;
inline constexpr int kGridVoxels = kGridSide * kGridSide * kGridSide;

// Axis-aligned metric box divided into 16 equal parts per axis.
struct GridBounds {
  Vec3 min_xyz = Vec3::Zero();
  Vec3 max_xyz = Vec3::Ones();

  Vec3 pitch() const { return (max_xyz - min_xyz) / kGridSide; }
  void validate() const;
  bool operator==(const GridBounds&) const = default;
};

using VoxelIndex = std::array<int, 3>;

// Linear index of voxel (i, j, k) with i along x: (k * 16 + j) * 16 + i.
inline int voxel_linear(const VoxelIndex& v) { return (v[2] * kGridSide + v[1]) * kGridSide + v[0]; }

// Voxel containing p, clamped to the grid.
VoxelIndex voxel_of(const Vec3& p, const GridBounds& bounds);

struct VoxelHeatmap {
  Eigen::VectorXd values;  // kGridVoxels entries in voxel_linear order
  GridBounds bounds;

  double at(int i, int j, int k) const { return values(voxel_linear({i, j, k})); }
};

// Per-axis min/max of the wrist translation over every step of every sequence.
GridBounds compute_grid_bounds(const TrajectorySet& train);

// Elementwise union of two boxes.
GridBounds merge_bounds(const GridBounds& a, const GridBounds& b);

// Gaussian heatmap values (voxel_linear order) centered on the center of voxel c.
Eigen::VectorXd heatmap_at_voxel(const VoxelIndex& c, double sigma_voxels);

// Gaussian of width sigma_voxels (in voxel pitches) centered on the center of the
// voxel containing p; points outside the grid clamp to the nearest boundary voxel.
VoxelHeatmap voxelize_contact_point(const Vec3& p, const GridBounds& bounds, double sigma_voxels = 1.0);

// Voxel-center positions, kGridVoxels x 3, rows in voxel_linear order.
Points3 coordinate_grid(const GridBounds& bounds);

}  // namespace intertraj

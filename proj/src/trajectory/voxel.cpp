#include "intertraj/trajectory/voxel.hpp"

#include <algorithm>
#include <cmath>

#include "intertraj/core/error.hpp"

namespace intertraj {

void GridBounds::validate() const {
  if (!min_xyz.allFinite() || !max_xyz.allFinite()) throw InvalidArgument("grid bounds: non-finite");
  if (!((max_xyz - min_xyz).array() > 0.0).all()) throw InvalidArgument("grid bounds: max must exceed min on every axis");
}

VoxelIndex voxel_of(const Vec3& p, const GridBounds& bounds) {
  bounds.validate();
  require(p.allFinite(), "voxel_of: non-finite point");
  const Vec3 rel = ((p - bounds.min_xyz).array() / bounds.pitch().array()).matrix();
  VoxelIndex v{};
  for (int a = 0; a < 3; ++a) v[a] = std::clamp(static_cast<int>(std::floor(rel(a))), 0, kGridSide - 1);
  return v;
}

GridBounds compute_grid_bounds(const TrajectorySet& train) {
  if (train.empty()) throw InvalidArgument("compute_grid_bounds: empty training set");
  GridBounds b;
  b.min_xyz.setConstant(std::numeric_limits<double>::infinity());
  b.max_xyz.setConstant(-std::numeric_limits<double>::infinity());
  for (const auto& tr : train) {
    const auto trans = tr.poses.middleCols<3>(kGlobalTransOffset);
    b.min_xyz = b.min_xyz.cwiseMin(trans.colwise().minCoeff().transpose());
    b.max_xyz = b.max_xyz.cwiseMax(trans.colwise().maxCoeff().transpose());
  }
  return b;
}

GridBounds merge_bounds(const GridBounds& a, const GridBounds& b) {
  return {a.min_xyz.cwiseMin(b.min_xyz), a.max_xyz.cwiseMax(b.max_xyz)};
}

Eigen::VectorXd heatmap_at_voxel(const VoxelIndex& c, double sigma_voxels) {
  require(sigma_voxels > 0.0, "heatmap: sigma must be positive");
  Eigen::VectorXd values(kGridVoxels);
  // Distances are measured between voxel centers in units of the per-axis pitch.
  const double inv = 1.0 / (2.0 * sigma_voxels * sigma_voxels);
  for (int k = 0; k < kGridSide; ++k)
    for (int j = 0; j < kGridSide; ++j)
      for (int i = 0; i < kGridSide; ++i) {
        const double d2 = double((i - c[0]) * (i - c[0]) + (j - c[1]) * (j - c[1]) + (k - c[2]) * (k - c[2]));
        values(voxel_linear({i, j, k})) = std::exp(-d2 * inv);
      }
  return values;
}

VoxelHeatmap voxelize_contact_point(const Vec3& p, const GridBounds& bounds, double sigma_voxels) {
  require(sigma_voxels > 0.0, "voxelize_contact_point: sigma must be positive");
  return {heatmap_at_voxel(voxel_of(p, bounds), sigma_voxels), bounds};
}

Points3 coordinate_grid(const GridBounds& bounds) {
  bounds.validate();
  const Vec3 pitch = bounds.pitch();
  Points3 g(kGridVoxels, 3);
  for (int k = 0; k < kGridSide; ++k)
    for (int j = 0; j < kGridSide; ++j)
      for (int i = 0; i < kGridSide; ++i) {
        const Vec3 idx(i + 0.5, j + 0.5, k + 0.5);
        g.row(voxel_linear({i, j, k})) = (bounds.min_xyz.array() + idx.array() * pitch.array()).matrix().transpose();
      }
  return g;
}

}  // namespace intertraj

#pragma once

// ASCII PLY meshes and point sets with per-vertex colors.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "intertraj/hand/types.hpp"

namespace intertraj {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kContactColor{220, 40, 40};
inline constexpr Rgb kFreeColor{190, 190, 190};

// Faces may be empty (point set). colors has one entry per vertex.
void write_ply(const std::string& path, const Points3& vertices, const Faces& faces, const std::vector<Rgb>& colors);

struct PlyMesh {
  Points3 vertices;
  Faces faces;
  std::vector<Rgb> colors;
};

// Reads files written by write_ply.
PlyMesh read_ply(const std::string& path);

// Contact color where the probability reaches `threshold`.
std::vector<Rgb> contact_colors(const Eigen::Ref<const Eigen::RowVectorXd>& prob, double threshold);

}  // namespace intertraj

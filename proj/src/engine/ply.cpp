#include "intertraj/engine/ply.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "intertraj/core/error.hpp"

namespace intertraj {

void write_ply(const std::string& path, const Points3& vertices, const Faces& faces, const std::vector<Rgb>& colors) {
  require(colors.size() == static_cast<std::size_t>(vertices.rows()), "write_ply: one color per vertex");
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << vertices.rows() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element face " << faces.rows() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  out << std::setprecision(9);
  for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
    const auto& c = colors[static_cast<std::size_t>(i)];
    out << vertices(i, 0) << ' ' << vertices(i, 1) << ' ' << vertices(i, 2) << ' ' << int(c[0]) << ' ' << int(c[1])
        << ' ' << int(c[2]) << '\n';
  }
  for (Eigen::Index f = 0; f < faces.rows(); ++f) out << "3 " << faces(f, 0) << ' ' << faces(f, 1) << ' ' << faces(f, 2) << '\n';
  if (!out) throw FormatError("write failed: " + path);
}

PlyMesh read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open: " + path);
  std::string line, word;
  Eigen::Index nv = -1, nf = -1;
  std::getline(in, line);
  if (line != "ply") throw FormatError(path + ": not a PLY file");
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ls(line);
    ls >> word;
    if (word == "format" && line != "format ascii 1.0") throw FormatError(path + ": only ASCII PLY is supported");
    if (word == "element") {
      std::string kind;
      Eigen::Index n = 0;
      ls >> kind >> n;
      (kind == "vertex" ? nv : nf) = n;
    }
  }
  if (nv < 0 || nf < 0) throw FormatError(path + ": missing element counts");
  PlyMesh m;
  m.vertices.resize(nv, 3);
  m.faces.resize(nf, 3);
  for (Eigen::Index i = 0; i < nv; ++i) {
    int r, g, b;
    in >> m.vertices(i, 0) >> m.vertices(i, 1) >> m.vertices(i, 2) >> r >> g >> b;
    m.colors.push_back({std::uint8_t(r), std::uint8_t(g), std::uint8_t(b)});
  }
  for (Eigen::Index f = 0; f < nf; ++f) {
    int k;
    in >> k >> m.faces(f, 0) >> m.faces(f, 1) >> m.faces(f, 2);
    if (k != 3) throw FormatError(path + ": only triangles are supported");
  }
  if (!in) throw FormatError(path + ": truncated");
  return m;
}

std::vector<Rgb> contact_colors(const Eigen::Ref<const Eigen::RowVectorXd>& prob, double threshold) {
  std::vector<Rgb> out(static_cast<std::size_t>(prob.size()));
  for (Eigen::Index i = 0; i < prob.size(); ++i) out[static_cast<std::size_t>(i)] = prob(i) >= threshold ? kContactColor : kFreeColor;
  return out;
}

}  // namespace intertraj

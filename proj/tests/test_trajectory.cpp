#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "intertraj/core/binary_io.hpp"
#include "intertraj/hand/hand_model.hpp"
#include "intertraj/trajectory/voxel.hpp"

using namespace intertraj;

namespace {

InteractionTrajectory random_trajectory(std::mt19937_64& rng, int T) {
  std::normal_distribution<double> n(0.0, 0.2);
  std::bernoulli_distribution bit(0.1);
  auto tr = InteractionTrajectory::with_horizon(T);
  tr.id = "seq" + std::to_string(rng() % 100000);
  tr.action_label = "grab";
  tr.object_label = "mug";
  tr.scene_label = "kitchen";
  for (int i = 0; i < kNumShapeParams; ++i) tr.shape.beta(i) = n(rng);
  for (Eigen::Index i = 0; i < tr.poses.size(); ++i) tr.poses.data()[i] += n(rng);
  for (Eigen::Index i = 0; i < tr.contacts.size(); ++i) tr.contacts.data()[i] = bit(rng) ? 1 : 0;
  return tr;
}

InteractionTrajectory wrist_path(const std::vector<Vec3>& points) {
  auto tr = InteractionTrajectory::with_horizon(static_cast<int>(points.size()));
  tr.action_label = tr.object_label = tr.scene_label = "x";
  for (std::size_t t = 0; t < points.size(); ++t) tr.poses.row(t).segment<3>(kGlobalTransOffset) = points[t];
  return tr;
}

std::string temp_file(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST_CASE("contact centroid examples") {
  HandMesh mesh{default_rig().template_vertices, default_rig().faces};
  ContactMap c;
  CHECK_FALSE(contact_centroid(mesh, c).has_value());
  c.mask(17) = 1;
  CHECK((*contact_centroid(mesh, c) - mesh.vertices.row(17).transpose()).norm() == 0.0);
  c.mask(400) = 1;
  const Vec3 mid = 0.5 * (mesh.vertices.row(17) + mesh.vertices.row(400)).transpose();
  CHECK((*contact_centroid(mesh, c) - mid).norm() < 1e-15);
}

TEST_CASE("contact centroid lies inside the bounding box of contacted vertices") {
  std::mt19937_64 rng(1);
  HandMesh mesh{default_rig().template_vertices, default_rig().faces};
  for (int trial = 0; trial < 50; ++trial) {
    ContactMap c;
    Vec3 lo = Vec3::Constant(1e9), hi = Vec3::Constant(-1e9);
    for (int k = 0; k < 5; ++k) {
      const int v = static_cast<int>(rng() % kNumVertices);
      c.mask(v) = 1;
      lo = lo.cwiseMin(mesh.vertices.row(v).transpose());
      hi = hi.cwiseMax(mesh.vertices.row(v).transpose());
    }
    const Vec3 p = *contact_centroid(mesh, c);
    CHECK(((p - lo).array() >= -1e-15).all());
    CHECK(((hi - p).array() >= -1e-15).all());
  }
}

TEST_CASE("grid bounds") {
  auto unit = wrist_path({Vec3(0, 0, 0), Vec3(1, 0.5, 0.2), Vec3(0.3, 1, 1)});
  GridBounds b = compute_grid_bounds({unit});
  CHECK(b.min_xyz == Vec3::Zero());
  CHECK(b.max_xyz == Vec3::Ones());
  CHECK(compute_grid_bounds({unit, wrist_path({Vec3(0.5, 0.5, 0.5)})}) == b);
  CHECK_THROWS_AS(compute_grid_bounds({}), InvalidArgument);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    TrajectorySet a, c;
    for (int s = 0; s < 3; ++s) {
      a.push_back(wrist_path({Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))}));
      c.push_back(wrist_path({Vec3(u(rng), u(rng), u(rng))}));
    }
    TrajectorySet all = a;
    all.insert(all.end(), c.begin(), c.end());
    CHECK(compute_grid_bounds(all) == merge_bounds(compute_grid_bounds(a), compute_grid_bounds(c)));
  }
}

TEST_CASE("invalid bounds raise") {
  GridBounds b;
  b.max_xyz(1) = 0.0;
  CHECK_THROWS_AS(voxelize_contact_point(Vec3::Zero(), b), InvalidArgument);
  CHECK_THROWS_AS(coordinate_grid(b), InvalidArgument);
  CHECK_THROWS_AS(voxelize_contact_point(Vec3::Zero(), GridBounds{}, 0.0), InvalidArgument);
}

TEST_CASE("coordinate grid examples") {
  GridBounds b{Vec3::Zero(), Vec3::Constant(16.0)};
  auto g = coordinate_grid(b);
  CHECK(g.rows() == kGridVoxels);
  CHECK((g.row(voxel_linear({0, 0, 0})).transpose() - Vec3::Constant(0.5)).norm() == 0.0);
  GridBounds c{Vec3(-1, 0, 2), Vec3(3, 0.4, 2.8)};
  auto h = coordinate_grid(c);
  CHECK((h.row(voxel_linear({15, 15, 15})).transpose() - (c.max_xyz - 0.5 * c.pitch())).norm() < 1e-14);
  CHECK((h.colwise().mean().transpose() - 0.5 * (c.min_xyz + c.max_xyz)).norm() < 1e-12);
  CHECK((h.row(voxel_linear({3, 0, 0})) - h.row(voxel_linear({2, 0, 0}))).norm() == doctest::Approx(c.pitch()(0)));
}

TEST_CASE("heatmap peak, shift and symmetry") {
  GridBounds b{Vec3(-0.4, -0.2, 0.1), Vec3(0.4, 0.6, 0.9)};
  const Vec3 pitch = b.pitch();
  auto centers = coordinate_grid(b);
  const Vec3 c0 = centers.row(voxel_linear({0, 0, 0})).transpose();
  auto h0 = voxelize_contact_point(c0, b);
  Eigen::Index arg;
  CHECK(h0.values.maxCoeff(&arg) == 1.0);
  CHECK(arg == voxel_linear({0, 0, 0}));

  const Vec3 p = centers.row(voxel_linear({5, 7, 9})).transpose();
  auto h = voxelize_contact_point(p, b);
  auto hs = voxelize_contact_point(p + Vec3(pitch(0), 0, 0), b);
  for (int k = 0; k < 16; ++k)
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 15; ++i) CHECK(hs.at(i + 1, j, k) == h.at(i, j, k));
  for (int d = 1; d <= 4; ++d) {
    CHECK(h.at(5 + d, 7, 9) == h.at(5 - d, 7, 9));
    CHECK(h.at(5, 7 + d, 9) == h.at(5, 7 - d, 9));
    CHECK(h.at(5, 7, 9 + d) == h.at(5, 7, 9 - d));
  }
  CHECK(h.at(6, 7, 9) == doctest::Approx(std::exp(-0.5)));
  auto wide = voxelize_contact_point(p, b, 2.0);
  CHECK(wide.at(6, 7, 9) == doctest::Approx(std::exp(-0.125)));
}

TEST_CASE("heatmap argmax is the containing voxel and values fall off with distance") {
  GridBounds b{Vec3(-0.4, -0.2, 0.1), Vec3(0.4, 0.6, 0.9)};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 p = b.min_xyz + Vec3(u(rng), u(rng), u(rng)).cwiseProduct(b.max_xyz - b.min_xyz);
    auto h = voxelize_contact_point(p, b);
    const auto v = voxel_of(p, b);
    Eigen::Index arg;
    h.values.maxCoeff(&arg);
    CHECK(arg == voxel_linear(v));
    CHECK(h.values(arg) == 1.0);
    CHECK((h.values.array() >= 0.0).all());
    for (int i = v[0]; i + 1 < 16; ++i) CHECK(h.at(i + 1, v[1], v[2]) <= h.at(i, v[1], v[2]));
  }
}

TEST_CASE("out-of-bounds points clamp to the boundary voxel") {
  GridBounds b{Vec3::Zero(), Vec3::Ones()};
  auto h = voxelize_contact_point(Vec3(-5, 0.5, 9), b);
  Eigen::Index arg;
  h.values.maxCoeff(&arg);
  CHECK(arg == voxel_linear({0, 8, 15}));
}

TEST_CASE("trajectory container round trip") {
  std::mt19937_64 rng(4);
  TrajectorySet set;
  for (int i = 0; i < 100; ++i) set.push_back(random_trajectory(rng, 1 + i % 7));
  const auto path = temp_file("intertraj_traj_roundtrip.bin");
  save_trajectories(path, set);
  auto back = load_trajectories(path);
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back[i].id == set[i].id);
    CHECK(back[i].action_label == set[i].action_label);
    CHECK(back[i].scene_label == set[i].scene_label);
    CHECK(back[i].shape.beta == set[i].shape.beta);
    CHECK(back[i].poses == set[i].poses);
    CHECK(back[i].contacts == set[i].contacts);
  }

  const auto size = std::filesystem::file_size(path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(size / 2));
    char c;
    f.read(&c, 1);
    f.seekp(static_cast<std::streamoff>(size / 2));
    c = static_cast<char>(c ^ 1);
    f.write(&c, 1);
  }
  CHECK_THROWS_WITH_AS(load_trajectories(path), doctest::Contains("checksum"), FormatError);
  std::filesystem::resize_file(path, size - 10);
  CHECK_THROWS_AS(load_trajectories(path), FormatError);

  save_trajectories(path, {});
  CHECK(load_trajectories(path).empty());
  std::filesystem::remove(path);
}

TEST_CASE("version mismatch is rejected") {
  const auto path = temp_file("intertraj_traj_version.bin");
  write_container(path, "TRAJ", 99, std::string(4, '\0'));
  CHECK_THROWS_WITH_AS(load_trajectories(path), doctest::Contains("version"), FormatError);
  write_container(path, "RIG ", 1, std::string(4, '\0'));
  CHECK_THROWS_AS(load_trajectories(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("trajectory validation") {
  auto tr = InteractionTrajectory::with_horizon(3);
  CHECK_THROWS_AS(tr.validate(), InvalidArgument);
  tr.action_label = tr.object_label = tr.scene_label = "a";
  tr.validate();
  tr.contacts(1, 5) = 2;
  CHECK_THROWS_AS(tr.validate(), InvalidArgument);
  CHECK_THROWS_AS(InteractionTrajectory::with_horizon(0), InvalidArgument);
}

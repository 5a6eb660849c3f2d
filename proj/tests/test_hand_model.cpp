#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "gradcheck.hpp"
#include "intertraj/hand/hand_model.hpp"

using namespace intertraj;
using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat3 a;
  for (int i = 0; i < 9; ++i) a.data()[i] = n(rng);
  Eigen::HouseholderQR<Mat3> qr(a);
  Mat3 q = qr.householderQ();
  // Fix the sign ambiguity so the result is a proper rotation.
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

HandPoseParams random_pose(std::mt19937_64& rng, double spread = 0.3) {
  std::normal_distribution<double> n(0.0, spread);
  HandPoseParams p = HandPoseParams::identity();
  for (int i = 0; i < kArticulationDims; ++i) p.articulation(i) += n(rng);
  for (int i = 0; i < 6; ++i) p.global_rot6d(i) += n(rng);
  for (int i = 0; i < 3; ++i) p.global_trans(i) = n(rng);
  return p;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("identity parameters reproduce the template") {
  const auto& rig = default_rig();
  auto [mesh, joints] = forward_kinematics(HandShapeParams{}, HandPoseParams::identity());
  CHECK(mesh.vertices.rows() == kNumVertices);
  CHECK(joints.joints.rows() == kNumJoints);
  CHECK((mesh.vertices - rig.template_vertices).cwiseAbs().maxCoeff() < 1e-12);
  Points3 expected = rig.joint_regressor * rig.template_vertices;
  CHECK((joints.joints - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("output dimensions and face indices") {
  std::mt19937_64 rng(1);
  HandShapeParams shape;
  shape.beta.setRandom();
  auto [mesh, joints] = forward_kinematics(shape, random_pose(rng));
  CHECK(mesh.vertices.rows() == 778);
  CHECK(joints.joints.rows() == 21);
  REQUIRE(mesh.faces);
  CHECK(mesh.faces->minCoeff() >= 0);
  CHECK(mesh.faces->maxCoeff() < 778);
}

TEST_CASE("rig invariants") {
  const auto& rig = default_rig();
  CHECK(rig.parents[0] == -1);
  for (int b = 1; b < kNumBones; ++b) {
    CHECK(rig.parents[b] >= 0);
    CHECK(rig.parents[b] < b);
  }
  CHECK((rig.skin_weights.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((rig.joint_regressor.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(rig.shape_basis.rows() == 10);
  CHECK(rig.shape_basis.cols() == 778 * 3);
  // Joint 0 is the wrist: the lowest joint along the finger direction.
  Points3 j = rig.joint_regressor * rig.template_vertices;
  for (int f = 0; f < 5; ++f) CHECK((j.row(16 + f) - j.row(0)).norm() > (j.row(1 + 3 * f) - j.row(0)).norm());
}

TEST_CASE("forward kinematics is deterministic") {
  std::mt19937_64 rng(2);
  auto pose = random_pose(rng);
  auto a = forward_kinematics(HandShapeParams{}, pose);
  auto b = forward_kinematics(HandShapeParams{}, pose);
  CHECK(a.first.vertices == b.first.vertices);
  CHECK(a.second.joints == b.second.joints);
}

TEST_CASE("gradient of the mean vertex with respect to translation is the identity") {
  HandLayer<double> layer;
  Graph<double> g;
  auto shape = g.variable(Tensor<double>::Zero(1, kNumShapeParams));
  std::mt19937_64 rng(3);
  auto pose = g.variable(random_pose(rng).flat().transpose());
  auto out = layer(g, shape, pose);
  for (int axis = 0; axis < 3; ++axis) {
    Graph<double> gg;
    auto s = gg.variable(shape.value());
    auto p = gg.variable(pose.value());
    auto o = layer(gg, s, p);
    Tensor<double> sel = Tensor<double>::Zero(1, kNumVertices * 3);
    for (int v = 0; v < kNumVertices; ++v) sel(0, 3 * v + axis) = 1.0 / kNumVertices;
    gg.backward(ad::sum(ad::mul(o.vertices, gg.constant(sel))));
    for (int k = 0; k < 3; ++k)
      CHECK(p.grad()(0, kGlobalTransOffset + k) == doctest::Approx(k == axis ? 1.0 : 0.0).epsilon(1e-12));
  }
  CHECK(out.vertices.cols() == kNumVertices * 3);
}

TEST_CASE("all parameter gradients match central finite differences") {
  HandLayer<double> layer;
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor<double> shape = testing::random_tensor(2, kNumShapeParams, rng, 0.5);
    Tensor<double> pose(2, kPoseDims);
    pose.row(0) = random_pose(rng).flat().transpose();
    pose.row(1) = random_pose(rng).flat().transpose();
    auto f = [&](Graph<double>& g, const std::vector<Var<double>>& v) {
      auto o = layer(g, v[0], v[1]);
      std::mt19937_64 wr(11);
      auto wv = g.constant(testing::random_tensor(2, kNumVertices * 3, wr));
      auto wj = g.constant(testing::random_tensor(2, kNumJoints * 3, wr));
      return ad::add(ad::sum(ad::mul(o.vertices, wv)), ad::sum(ad::mul(o.joints, wj)));
    };
    CHECK(testing::gradcheck_inputs({shape, pose}, f, 1e-5) < 1e-4);
  }
}

TEST_CASE("non-finite or mis-shaped inputs are rejected") {
  auto pose = HandPoseParams::identity();
  pose.global_trans(1) = std::nan("");
  CHECK_THROWS_AS(forward_kinematics(HandShapeParams{}, pose), InvalidArgument);
  HandShapeParams shape;
  shape.beta(3) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(forward_kinematics(shape, HandPoseParams::identity()), InvalidArgument);
  HandLayer<double> layer;
  Graph<double> g;
  CHECK_THROWS_AS(layer(g, g.constant(Tensor<double>::Zero(1, 9)), g.constant(Tensor<double>::Zero(1, 99))),
                  InvalidArgument);
}

TEST_CASE("rot6d examples") {
  CHECK((rot6d_to_matrix<double>(identity_rot6d()) - Mat3::Identity()).norm() == 0.0);
  Mat3 rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  Vec6 expected;
  expected << 0, 1, 0, -1, 0, 0;
  CHECK((matrix_to_rot6d<double>(rz) - expected).norm() < 1e-15);
  CHECK((rot6d_to_matrix<double>(expected) - rz).norm() < 1e-15);
  CHECK((axis_angle_matrix<double>(Vec3::UnitZ(), M_PI / 2) - rz).norm() < 1e-15);
}

TEST_CASE("rot6d round trip over random rotations") {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = random_rotation(rng);
    worst = std::max(worst, (rot6d_to_matrix<double>(matrix_to_rot6d<double>(r)) - r).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("rot6d degenerate and non-rotation inputs raise") {
  Vec6 parallel;
  parallel << 1, 2, 3, 2, 4, 6;
  CHECK_THROWS_AS(rot6d_to_matrix<double>(parallel), InvalidArgument);
  CHECK_THROWS_AS(rot6d_to_matrix<double>(Vec6::Zero()), InvalidArgument);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1;
  CHECK_THROWS_AS(matrix_to_rot6d<double>(reflect), InvalidArgument);
  CHECK_THROWS_AS(matrix_to_rot6d<double>(Mat3(2.0 * Mat3::Identity())), InvalidArgument);
  HandMesh mesh{default_rig().template_vertices, default_rig().faces};
  CHECK_THROWS_AS(apply_global(mesh, parallel, Vec3::Zero()), InvalidArgument);
}

TEST_CASE("apply_global examples and rigidity") {
  HandMesh mesh{default_rig().template_vertices, default_rig().faces};
  CHECK(apply_global(mesh, identity_rot6d(), Vec3::Zero()).vertices == mesh.vertices);
  const Vec3 t(0.1, -0.2, 0.3);
  auto shifted = apply_global(mesh, identity_rot6d(), t);
  CHECK(((shifted.vertices.rowwise() - t.transpose()) - mesh.vertices).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(6);
  const Mat3 r = random_rotation(rng);
  auto moved = apply_global(mesh, matrix_to_rot6d<double>(r), Vec3(0.4, 0.5, -0.6));
  double worst = 0.0;
  for (int i = 0; i < kNumVertices; i += 7)
    for (int j = i + 1; j < kNumVertices; j += 5) {
      const double d0 = (mesh.vertices.row(i) - mesh.vertices.row(j)).norm();
      const double d1 = (moved.vertices.row(i) - moved.vertices.row(j)).norm();
      if (d0 > 0) worst = std::max(worst, std::abs(d1 - d0) / d0);
    }
  CHECK(worst < 1e-9);
}

TEST_CASE("apply_global composes as a group action") {
  std::mt19937_64 rng(7);
  HandMesh mesh{default_rig().template_vertices, default_rig().faces};
  const Mat3 r1 = random_rotation(rng), r2 = random_rotation(rng);
  const Vec3 t1(0.1, 0.2, 0.3), t2(-0.3, 0.05, 0.7);
  auto twice = apply_global(apply_global(mesh, matrix_to_rot6d<double>(r1), t1), matrix_to_rot6d<double>(r2), t2);
  auto once = apply_global(mesh, matrix_to_rot6d<double>(Mat3(r2 * r1)), r2 * t1 + t2);
  CHECK((twice.vertices - once.vertices).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("global pose parameters act as apply_global on the local mesh") {
  std::mt19937_64 rng(8);
  auto pose = random_pose(rng);
  auto local = pose;
  local.global_rot6d = identity_rot6d();
  local.global_trans.setZero();
  auto [posed, j1] = forward_kinematics(HandShapeParams{}, pose);
  auto [base, j0] = forward_kinematics(HandShapeParams{}, local);
  auto moved = apply_global(base, pose.global_rot6d, pose.global_trans);
  CHECK((posed.vertices - moved.vertices).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("shape coefficients change the rest mesh linearly") {
  const auto& rig = default_rig();
  HandShapeParams shape;
  shape.beta(0) = 1.0;
  auto [mesh, joints] = forward_kinematics(shape, HandPoseParams::identity());
  Points3 expected = rig.template_vertices;
  for (int v = 0; v < kNumVertices; ++v) expected.row(v) += rig.shape_basis.row(0).segment(3 * v, 3);
  CHECK((mesh.vertices - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((mesh.vertices - rig.template_vertices).norm() > 1e-4);
}

TEST_CASE("rig asset save, load, and corruption") {
  const auto& rig = default_rig();
  const std::string path = temp_path("intertraj_test_rig.bin");
  rig.save(path);
  HandRig loaded = HandRig::load(path);
  CHECK(loaded.template_vertices == rig.template_vertices);
  CHECK(loaded.skin_weights == rig.skin_weights);
  CHECK(loaded.joint_regressor == rig.joint_regressor);
  CHECK(loaded.shape_basis == rig.shape_basis);
  CHECK(loaded.parents == rig.parents);
  CHECK(*loaded.faces == *rig.faces);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    char c = 0;
    f.read(&c, 1);
    f.seekp(200);
    c = static_cast<char>(c ^ 0x5a);
    f.write(&c, 1);
  }
  CHECK_THROWS_AS(HandRig::load(path), FormatError);
  std::filesystem::resize_file(path, 64);
  CHECK_THROWS_AS(HandRig::load(path), FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(HandRig::load(path), Error);
}

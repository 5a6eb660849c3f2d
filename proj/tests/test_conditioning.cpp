#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "gradcheck.hpp"
#include "intertraj/conditioning/contact_encoder.hpp"
#include "intertraj/conditioning/providers.hpp"

using namespace intertraj;
using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

const std::vector<std::string> kActions = {"grab",  "open",   "screw", "mix",   "rotate", "align",
                                           "slide", "lift",   "place", "pour",  "press",  "pull",
                                           "push",  "turn",   "wipe",  "shake", "insert", "remove",
                                           "flip",  "tap",    "hold",  "close", "stir",   "unscrew"};

SceneDescriptor sample_scene() {
  SceneDescriptor s;
  s.scene_label = "kitchen";
  s.object_label = "mug";
  s.object_position = Vec3(0.05, 0.1, 0.45);
  s.object_yaw = 0.3;
  s.hand_position = Vec3(-0.02, 0.12, 0.4);
  s.grip = 0.4;
  return s;
}

GridBounds test_bounds() { return {Vec3(-0.3, -0.2, 0.2), Vec3(0.3, 0.3, 0.7)}; }

}  // namespace

TEST_CASE("text embeddings are deterministic unit vectors") {
  HashTextEmbedder text(3);
  auto a = text.embed("grab"), b = text.embed("grab");
  CHECK(a.size() == kTextDims);
  CHECK(a == b);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(text.embed(""), InvalidArgument);
  double worst = -1.0;
  for (std::size_t i = 0; i < kActions.size(); ++i)
    for (std::size_t j = i + 1; j < kActions.size(); ++j)
      worst = std::max(worst, text.embed(kActions[i]).dot(text.embed(kActions[j])));
  CHECK(worst < 0.5);
  CHECK(HashTextEmbedder(4).embed("grab") != a);
}

TEST_CASE("image embeddings: determinism, width and hand components") {
  SyntheticImageEmbedder img(5);
  auto s = sample_scene();
  auto e = img.embed(s);
  CHECK(e.size() == kImageDims);
  CHECK(e == img.embed(s));
  CHECK(e.allFinite());
  auto n = img.embed(s.without_hand());
  CHECK(e.head(kImageHandOffset) == n.head(kImageHandOffset));
  CHECK(n.tail(kImageDims - kImageHandOffset).norm() == 0.0);
  CHECK(e.tail(kImageDims - kImageHandOffset).norm() > 0.1);

  auto moved = s;
  moved.hand_position.x() += 0.01;
  auto em = img.embed(moved);
  CHECK(em.head(kImageHandOffset) == e.head(kImageHandOffset));
  CHECK((em - e).norm() > 0.0);
  CHECK((em - e).norm() < 0.5);  // smooth in the descriptor

  auto other = s;
  other.object_label = "knife";
  CHECK((img.embed(other).head(kImageHandOffset) - e.head(kImageHandOffset)).norm() > 0.1);

  auto bad = s;
  bad.object_yaw = std::nan("");
  CHECK_THROWS_AS(img.embed(bad), InvalidArgument);
}

TEST_CASE("vector tables plug external features in") {
  const auto path = (std::filesystem::temp_directory_path() / "intertraj_table.txt").string();
  {
    std::ofstream f(path);
    f << "# comment\nhello";
    for (int i = 0; i < kTextDims; ++i) f << ' ' << i * 0.5;
    f << "\n\n";
  }
  auto text = make_text_embedder("table:" + path, 0);
  CHECK(text->embed("hello")(3) == 1.5);
  CHECK_THROWS_AS(text->embed("other"), InvalidArgument);
  CHECK_THROWS_AS(make_image_embedder("table:" + path, 0), FormatError);
  CHECK_THROWS_AS(make_text_embedder("clip", 0), InvalidArgument);
  CHECK_THROWS_AS(make_text_embedder("table:/nonexistent/x.txt", 0), MissingArtifact);
  std::filesystem::remove(path);
}

TEST_CASE("scene sidecar round trip") {
  std::vector<SceneRecord> recs(2);
  recs[0].id = "a";
  recs[0].frames = {sample_scene(), sample_scene().without_hand()};
  recs[1].id = "b";
  const auto path = (std::filesystem::temp_directory_path() / "intertraj_scenes.bin").string();
  save_scenes(path, recs);
  auto back = load_scenes(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].frames.size() == 2);
  CHECK(back[0].frames[1].hand_visible == false);
  CHECK(back[0].frames[0].hand_position == recs[0].frames[0].hand_position);
  SyntheticImageEmbedder img(1);
  CHECK(img.embed(back[0].frames[0]) == img.embed(recs[0].frames[0]));
  std::filesystem::remove(path);
}

TEST_CASE("contact encoder output width and same-voxel identity") {
  std::mt19937_64 rng(7);
  ContactEncoder<float> enc(rng);
  const auto bounds = test_bounds();
  const Tensor<float> coords = coordinate_grid(bounds).cast<float>();
  const Vec3 p(0.01, 0.02, 0.41);
  const Vec3 q = p + 0.2 * bounds.pitch().cwiseProduct(Vec3(0.1, 0.1, 0.1));
  REQUIRE(voxel_of(p, bounds) == voxel_of(q, bounds));
  Tensor<float> h(2, kGridVoxels);
  h.row(0) = voxelize_contact_point(p, bounds).values.transpose().cast<float>();
  h.row(1) = voxelize_contact_point(q, bounds).values.transpose().cast<float>();
  Graph<float> g;
  auto f = enc(g, g.constant(h), coords).value();
  CHECK(f.rows() == 2);
  CHECK(f.cols() == kContactFeatureDims);
  CHECK(f.row(0) == f.row(1));

  auto batch = make_heatmap_batch<float>({p, std::nullopt, q, Vec3(0.2, 0.2, 0.6)}, bounds, 1.0);
  CHECK(batch.heatmaps.rows() == 3);
  CHECK(batch.gather == std::vector<Eigen::Index>{0, 1, 0, 2});
  CHECK(batch.heatmaps.row(1).norm() == 0.0);
  CHECK(batch.heatmaps.row(0) == h.row(0));
  Graph<float> g2;
  auto all = encode_contact_batch(g2, enc, batch, coords).value();
  CHECK(all.rows() == 4);
  CHECK((all.row(0) - f.row(0)).norm() < 1e-6f);
  CHECK(all.row(0) == all.row(2));
}

TEST_CASE("contact encoder gradients match finite differences") {
  std::mt19937_64 rng(8);
  ContactEncoder<double> enc(rng, ContactEncoderDims{{3, 4, 4, 5}, {1, 2, 2, 1}, 6});
  const auto bounds = test_bounds();
  const Tensor<double> coords = coordinate_grid(bounds);
  Tensor<double> h(2, kGridVoxels);
  h.row(0) = voxelize_contact_point(Vec3(0.0, 0.0, 0.4), bounds).values.transpose();
  h.row(1) = voxelize_contact_point(Vec3(0.1, -0.1, 0.5), bounds).values.transpose();
  ad::ParameterList<double> params;
  enc.collect("contact", params);
  std::mt19937_64 wr(3);
  testing::randomize(params, wr, 0.3);
  const Tensor<double> w = testing::random_tensor(2, 6, wr);
  auto f = [&](Graph<double>& g, const std::vector<Var<double>>& v) {
    return ad::sum(ad::mul(enc(g, v[0], coords), g.constant(w)));
  };
  CHECK(testing::gradcheck_sampled(h, f, 40, 6, 1) < 1e-3);

  CHECK(testing::gradcheck_params(
            params,
            [&](Graph<double>& g) { return ad::sum(ad::mul(enc(g, g.constant(h), coords), g.constant(w))); }, 1e-5,
            false, 7, 12) < 1e-3);
}

TEST_CASE("contact encoder rejects bad shapes") {
  std::mt19937_64 rng(9);
  ContactEncoder<double> enc(rng);
  Graph<double> g;
  CHECK_THROWS_AS(enc(g, g.constant(Tensor<double>::Zero(1, 100)), coordinate_grid(test_bounds())),
                  InvalidArgument);
}

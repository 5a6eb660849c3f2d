#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "intertraj/pipeline/artifacts.hpp"
#include "intertraj/pipeline/pipeline.hpp"

using namespace intertraj;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("intertraj_pipeline_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

Config tiny_config(const std::string& variant = "ltf") {
  Config c;
  for (const char* kv :
       {"horizon=4", "data.sequences=6", "model.width=12", "model.ffn=16", "model.encoder_ffn=16", "codebook.K=8",
        "codebook.E=12", "codebook.Q=2", "contact.channels=2,2,2,2", "contact.strides=2,2,2,1", "indexer.hidden=16,12",
        "indexer.ffn=16", "train.epochs_codebook=2", "train.epochs_indexer=2", "train.epochs_predictor=2",
        "train.batch=3", "diffusion.steps=3"})
    c.apply_override(kv);
  c.set("variant", variant);
  return c;
}

struct Data {
  Settings s;
  GridBounds bounds;
  std::vector<SequenceSample> samples;
};

Data tiny_data(const Config& c) {
  Data d;
  d.s = settings_from(c);
  auto ds = generate_dataset(d.s.data);
  d.bounds = compute_grid_bounds(ds.trajectories);
  auto p = make_providers(d.s);
  d.samples = build_samples(d.s, p, d.bounds, ds.trajectories, ds.scenes);
  return d;
}

}  // namespace

TEST_CASE("config parsing: comments, includes, overrides and unknown keys") {
  const auto dir = temp_dir("config");
  {
    std::ofstream(dir / "base.cfg") << "# base\nmodel.width = 64\nseed = 3\n";
    std::ofstream(dir / "run.cfg") << "include base.cfg\nseed = 5   # later wins\nvariant = ctf\n";
  }
  Config c = Config::load((dir / "run.cfg").string());
  CHECK(c.integer("model.width") == 64);
  CHECK(c.integer("seed") == 5);
  CHECK(c.str("variant") == "ctf");
  c.apply_override("seed=9");
  CHECK(c.integer("seed") == 9);
  CHECK_THROWS_AS(c.apply_override("model.depth=3"), InvalidArgument);
  CHECK_THROWS_AS(c.apply_override("seed"), InvalidArgument);
  CHECK_THROWS_AS(Config::parse("nonsense line"), InvalidArgument);
  CHECK_THROWS_AS(Config::parse("bogus.key = 1"), InvalidArgument);
  CHECK_THROWS_AS(Config::load((dir / "missing.cfg").string()), MissingArtifact);

  // Serialization is canonical: parse(serialize) reproduces the values and hash.
  const Config back = Config::parse(c.serialize());
  CHECK(back.values() == c.values());
  CHECK(back.hash() == c.hash());
  Config other = c;
  other.apply_override("model.width=65");
  CHECK(other.hash() != c.hash());
  std::filesystem::remove_all(dir);
}

TEST_CASE("settings validate their domains") {
  const Settings s = settings_from(Config{});
  CHECK(s.predictor.variant == PredictorVariant::Ltf);
  CHECK(s.train_indexer.seed == s.seed + 1);
  auto bad = [](const std::string& kv) {
    Config c;
    c.apply_override(kv);
    return c;
  };
  for (const char* kv : {"variant=gan", "task.mode=future", "hand_visibility=maybe", "contact.threshold=1.5",
                         "contact.f1_average=weighted", "train.lr=0", "eval.split=all", "sweep.fractions=0,0.5",
                         "contact.strides=1,2,3,1", "contact.channels=8,16", "codebook.ema_decay=1", "horizon=1",
                         "split.mode=random", "seed=abc", "train.lr_schedule=step"}) {
    CAPTURE(kv);
    CHECK_THROWS_AS(settings_from(bad(kv)), InvalidArgument);
  }
}

TEST_CASE("cosine schedule decays from the base rate to its floor") {
  Config c;
  c.apply_override("train.lr_schedule=cosine");
  c.apply_override("train.lr=2e-3");
  const TrainOptions o = settings_from(c).train_codebook;
  REQUIRE(o.cosine);
  CHECK(scheduled_lr(o, 0) == doctest::Approx(2e-3));
  CHECK(scheduled_lr(o, o.epochs - 1) == doctest::Approx(2e-3 * o.lr_floor));
  CHECK(scheduled_lr(o, (o.epochs - 1) / 2) == doctest::Approx(2e-3 * (1.0 + o.lr_floor) / 2).epsilon(0.02));
  for (int e = 1; e < o.epochs; ++e) CHECK(scheduled_lr(o, e) < scheduled_lr(o, e - 1));
  CHECK(scheduled_lr(settings_from(Config{}).train_codebook, 150) == doctest::Approx(1e-4));
}

TEST_CASE("default models carry the reference dimensions") {
  const Settings s = settings_from(Config{});
  const GridBounds bounds{Vec3(-0.3, -0.3, 0.2), Vec3(0.3, 0.3, 0.8)};
  InterCodeModel cb(s.codebook, bounds, 0);
  CHECK(cb.config().joint_width() == 1824);
  CHECK(cb.decoder().dims().in_width == 1824);
  CHECK(cb.codebook().config().K == 512);
  CHECK(cb.codebook().config().E == 512);
  CHECK(cb.codebook().config().Q == 6);
  CHECK(cb.codebook().config().gumbel_temp == 0.5);
  CHECK(cb.coords().rows() == 16 * 16 * 16);
  CHECK(kNumVertices == 778);
  IndexerModel ix(s.indexer, bounds, 0);
  CHECK(ix.input_width() == 1315);
  PredictorModel pr(s.predictor, bounds, 0);
  CHECK(pr.decoder().dims().in_width == 1824);
}

TEST_CASE("training subsets are seeded, sized and sorted") {
  for (double f : {0.25, 0.5, 0.75, 1.0}) {
    const auto a = training_subset(101, f, 4);
    CHECK(a == training_subset(101, f, 4));
    CHECK(a.size() == static_cast<std::size_t>(std::llround(f * 101)));
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == a.size());
  }
  CHECK(training_subset(3, 0.01, 0).size() == 1u);
  CHECK(training_subset(100, 0.5, 1) != training_subset(100, 0.5, 2));
  CHECK_THROWS_AS(training_subset(10, 0.0, 0), InvalidArgument);
}

TEST_CASE("splits map to disjoint trajectory sets") {
  Config c;
  c.apply_override("data.sequences=60");
  c.apply_override("horizon=4");
  const Settings s = settings_from(c);
  const auto ds = generate_dataset(s.data);
  const auto split = make_splits(ds.trajectories, SplitMode::Task, 0);
  const auto d = apply_split(ds, split);
  CHECK(d.train.size() + d.val.size() + d.test.size() == ds.trajectories.size());
  CHECK(d.train_scenes.size() == d.train.size());
  std::set<std::string> train_ids;
  for (const auto& t : d.train) train_ids.insert(t.id);
  for (const auto& t : d.test) CHECK(train_ids.count(t.id) == 0);
  CHECK(&d.eval_set("test") == &d.test);
  CHECK(&d.eval_set("val") == &d.val);
  CHECK_THROWS_AS(d.eval_set("other"), InvalidArgument);
}

TEST_CASE("artifacts round trip to identical predictions") {
  const auto dir = temp_dir("artifacts");
  for (const char* variant : {"ltf", "ldiff", "ctf", "cdiff"}) {
    CAPTURE(variant);
    const Config c = tiny_config(variant);
    const Data d = tiny_data(c);
    TrainedModels m = train_all(d.s, d.bounds, d.samples);
    const auto before = predict(d.s, m, d.samples);

    TrainedModels r;
    if (m.codebook) {
      save_codebook((dir / "codebook.bin").string(), *m.codebook, c);
      save_indexer((dir / "indexer.bin").string(), *m.indexer, c);
      Config loaded;
      r.codebook = load_codebook((dir / "codebook.bin").string(), &loaded);
      CHECK(loaded.hash() == c.hash());
      r.indexer = load_indexer((dir / "indexer.bin").string());
      CHECK(tokenize(*r.codebook, d.samples)[1] == tokenize(*m.codebook, d.samples)[1]);
      CHECK_THROWS_AS(load_indexer((dir / "codebook.bin").string()), FormatError);
    }
    save_predictor((dir / "predictor.bin").string(), *m.predictor, c);
    r.predictor = load_predictor((dir / "predictor.bin").string());
    CHECK(r.predictor->config().variant == m.predictor->config().variant);
    CHECK(r.predictor->latent_scale() == m.predictor->latent_scale());
    const auto after = predict(d.s, r, d.samples);
    REQUIRE(after.size() == before.size());
    for (std::size_t i = 0; i < after.size(); ++i) {
      CHECK(after[i].id == before[i].id);
      CHECK((after[i].pose - before[i].pose).norm() == 0.0);
      CHECK((after[i].contact_prob - before[i].contact_prob).norm() == 0.0);
    }
    CHECK(file_hash((dir / "predictor.bin").string()).size() == 16u);
  }
  CHECK_THROWS_AS(load_codebook((dir / "nothing.bin").string()), MissingArtifact);
  CHECK_THROWS_AS(file_hash((dir / "nothing.bin").string()), MissingArtifact);
  std::filesystem::remove_all(dir);
}

TEST_CASE("two-stage variants refuse to run without their codebook") {
  const Config c = tiny_config("ltf");
  const Data d = tiny_data(c);
  CHECK_THROWS_AS(predictor_latents(d.s, nullptr, nullptr, d.samples, false), MissingArtifact);
  Settings single = d.s;
  single.predictor.variant = PredictorVariant::Ctf;
  CHECK(predictor_latents(single, nullptr, nullptr, d.samples, false).retrieved.empty());
}

TEST_CASE("disabling the contact loss keeps training runnable") {
  Config c = tiny_config("ltf");
  c.apply_override("use_contact_loss=false");
  const Data d = tiny_data(c);
  CHECK_FALSE(d.s.codebook.use_contact_loss);
  CHECK_FALSE(d.s.predictor.use_contact_loss);
  TrainedModels m = train_all(d.s, d.bounds, d.samples);
  const auto preds = predict(d.s, m, d.samples);
  const auto summary = evaluate_predictions(d.s, preds, d.samples);
  CHECK(std::isfinite(summary.mpjpe));
  CHECK(summary.sequences == static_cast<int>(d.samples.size()));
}

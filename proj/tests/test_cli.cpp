#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "intertraj/engine/ply.hpp"
#include "intertraj/pipeline/artifacts.hpp"

using namespace intertraj;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

fs::path fresh_root(const std::string& name) {
  auto p = fs::temp_directory_path() / ("intertraj_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result cli(const fs::path& root, const std::string& cfg, const std::string& args) {
  const fs::path log = root / "last.log";
  const std::string cmd = "INTERTRAJ_OUTPUT_ROOT='" + root.string() + "' '" INTERTRAJ_CLI "' " + args + " -c '" +
                          std::string(INTERTRAJ_CONFIG_DIR) + "/" + cfg + "' > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

void require_ok(const fs::path& root, const std::string& cfg, const std::string& args) {
  const Result r = cli(root, cfg, args);
  INFO(args << "\n" << r.output);
  REQUIRE(r.code == 0);
}

void train_pipeline(const fs::path& root, const std::string& cfg, const std::string& extra = "") {
  for (const char* step : {"gen-data", "train-codebook", "train-indexer", "train-predictor"})
    require_ok(root, cfg, std::string(step) + " " + extra);
}

nlohmann::json manifest(const fs::path& run, const std::string& command) {
  return nlohmann::json::parse(slurp(run / "manifests" / (command + ".json")));
}

// Output hashes minus the training logs, which carry wall-clock timings.
nlohmann::json artifact_hashes(const nlohmann::json& m) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [rel, hash] : m["outputs"].items())
    if (rel.rfind("logs/", 0) != 0) out[rel] = hash;
  return out;
}

}  // namespace

TEST_CASE("tiny pipeline runs end to end and evaluate is repeatable") {
  const auto root = fresh_root("tiny");
  const fs::path run = root / "runs/tiny";
  train_pipeline(root, "tiny.cfg");
  for (const char* f : {"data/trajectories.itj", "data/scenes.scn", "data/split.txt", "models/codebook.ckpt",
                        "models/indexer.ckpt", "models/predictor_ltf_forecasting.ckpt"})
    CHECK_MESSAGE(fs::exists(run / f), std::string(f));

  const Result a = cli(root, "tiny.cfg", "evaluate");
  const Result b = cli(root, "tiny.cfg", "evaluate");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.output == b.output);
  CHECK(a.output.find("M-PE") != std::string::npos);
  CHECK(slurp(run / "eval/metrics_test_ltf_forecasting.md") == a.output);

  SUBCASE("export-viz frames match the prediction dump") {
    require_ok(root, "tiny.cfg", "export-viz viz.sequence=1");
    const auto preds = load_predictions((run / "eval/predictions_test_ltf_forecasting.ckpt").string());
    REQUIRE(preds.size() > 1);
    const auto& p = preds[1];
    for (const char* view : {"camera", "alt"}) {
      const fs::path dir = run / "viz" / p.id / view;
      for (Eigen::Index t = 0; t < p.pose.rows(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03d.ply", static_cast<int>(t));
        const PlyMesh m = read_ply((dir / name).string());
        CHECK(m.vertices.rows() == 778);
        CHECK(m.faces.rows() > 0);
        CHECK(m.colors == contact_colors(p.contact_prob.row(t), 0.5));
      }
      CHECK(read_ply((dir / "markers.ply").string()).vertices.rows() == 2);
    }
    // The alternate view is a rigid rotation of the camera view.
    const PlyMesh cam = read_ply((run / "viz" / p.id / "camera/frame_000.ply").string());
    const PlyMesh alt = read_ply((run / "viz" / p.id / "alt/frame_000.ply").string());
    const double d_cam = (cam.vertices.row(0) - cam.vertices.row(777)).norm();
    const double d_alt = (alt.vertices.row(0) - alt.vertices.row(777)).norm();
    CHECK(d_alt == doctest::Approx(d_cam).epsilon(1e-4));
    CHECK((cam.vertices - alt.vertices).norm() > 1e-6);
  }

  SUBCASE("other variants train and evaluate") {
    for (const char* v : {"ctf", "cdiff", "ldiff"}) {
      const std::string o = std::string("variant=") + v;
      require_ok(root, "tiny.cfg", "train-predictor " + o);
      require_ok(root, "tiny.cfg", "evaluate " + o);
      CHECK(fs::exists(run / ("eval/metrics_test_" + std::string(v) + "_forecasting.md")));
    }
  }

  SUBCASE("manifests hash their outputs") {
    const auto j = manifest(run, "train-predictor");
    CHECK(j["command"] == "train-predictor");
    REQUIRE(j["outputs"].contains("models/predictor_ltf_forecasting.ckpt"));
    CHECK(j["outputs"]["models/predictor_ltf_forecasting.ckpt"] == file_hash((run / "models/predictor_ltf_forecasting.ckpt").string()));
    CHECK(j["inputs"].contains("models/codebook.ckpt"));
  }
}

TEST_CASE("sweep-scale writes one row per fraction and seed") {
  const auto root = fresh_root("sweep");
  require_ok(root, "tiny.cfg", "gen-data");
  require_ok(root, "tiny.cfg", "sweep-scale variant=ctf sweep.fractions=0.5,1.0 sweep.seeds=0,1");
  std::ifstream in(root / "runs/tiny/sweep/sweep_test_ctf_forecasting.tsv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("fraction\tseed\ttrain_sequences", 0) == 0);
  int rows = 0;
  std::map<double, std::set<int>> counts;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    double fraction = 0;
    int seed = 0, count = 0;
    ls >> fraction >> seed >> count;
    counts[fraction].insert(count);
    ++rows;
  }
  REQUIRE(counts.size() == 2);
  // Every seed sees the same subset size, and the full fraction is the whole training split.
  CHECK(counts[0.5].size() == 1);
  CHECK(counts[1.0].size() == 1);
  CHECK(*counts[1.0].begin() == 2 * *counts[0.5].begin());
  CHECK(rows == 4);
}

TEST_CASE("errors map to exit codes") {
  const auto root = fresh_root("errors");
  SUBCASE("unknown config key is a usage error") {
    const Result r = cli(root, "tiny.cfg", "gen-data no.such_key=1");
    CHECK(r.code == 1);
    CHECK(r.output.find("no.such_key") != std::string::npos);
  }
  SUBCASE("bad value is a usage error") {
    CHECK(cli(root, "tiny.cfg", "gen-data variant=xyz").code == 1);
  }
  SUBCASE("unknown subcommand") {
    CHECK(cli(root, "tiny.cfg", "frobnicate").code == 1);
  }
  SUBCASE("missing artifact names the command to run first") {
    const Result r = cli(root, "tiny.cfg", "train-codebook");
    CHECK(r.code == 2);
    CHECK(r.output.find("run gen-data first") != std::string::npos);
    require_ok(root, "tiny.cfg", "gen-data");
    const Result e = cli(root, "tiny.cfg", "evaluate");
    CHECK(e.code == 2);
    CHECK(e.output.find("run train-") != std::string::npos);
    const Result v = cli(root, "tiny.cfg", "export-viz");
    CHECK(v.code == 2);
    CHECK(v.output.find("run evaluate first") != std::string::npos);
  }
}

TEST_CASE("same config and seed reproduce identical artifacts") {
  const auto a = fresh_root("repro_a");
  const auto b = fresh_root("repro_b");
  train_pipeline(a, "tiny.cfg");
  train_pipeline(b, "tiny.cfg");
  for (const char* cmd : {"gen-data", "train-codebook", "train-indexer", "train-predictor"}) {
    const auto ja = manifest(a / "runs/tiny", cmd);
    const auto jb = manifest(b / "runs/tiny", cmd);
    CHECK(ja["config_hash"] == jb["config_hash"]);
    CHECK_MESSAGE(artifact_hashes(ja) == artifact_hashes(jb), std::string(cmd));
    CHECK(!artifact_hashes(ja).empty());
  }
  // A different seed changes the models.
  const auto c = fresh_root("repro_c");
  train_pipeline(c, "tiny.cfg", "seed=5");
  CHECK(artifact_hashes(manifest(c / "runs/tiny", "train-codebook")) !=
        artifact_hashes(manifest(a / "runs/tiny", "train-codebook")));
}

TEST_CASE("overfit profile completes the full pipeline within 15 minutes" * doctest::skip()) {
  const auto root = fresh_root("overfit");
  const auto start = std::chrono::steady_clock::now();
  train_pipeline(root, "overfit.cfg");
  require_ok(root, "overfit.cfg", "evaluate eval.split=train");
  require_ok(root, "overfit.cfg", "export-viz eval.split=train");
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  MESSAGE("overfit pipeline took " << minutes << " min");
  CHECK(minutes < 15.0);
}

// Command-line driver: data generation, the three training stages, evaluation,
// the training-set size sweep and mesh export.
//
//   intertraj <command> [-c run.cfg] [key=value ...]
//
// Artifacts go to <root>/<output.dir>, where <root> is $INTERTRAJ_OUTPUT_ROOT
// or the working directory. Exit codes: 0 success, 1 usage, 2 runtime.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "intertraj/engine/ply.hpp"
#include "intertraj/hand/hand_model.hpp"
#include "intertraj/hand/rotation.hpp"
#include "intertraj/pipeline/artifacts.hpp"
#include "intertraj/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace intertraj;

namespace {

constexpr const char* kRootEnv = "INTERTRAJ_OUTPUT_ROOT";

struct Run {
  Config cfg;
  Settings s;
  fs::path dir;
  std::map<std::string, std::string> inputs, outputs;  // relative path -> hash

  fs::path path(const std::string& rel) const { return dir / rel; }

  std::string input(const std::string& rel) {
    const fs::path p = path(rel);
    inputs[rel] = file_hash(p.string());
    return p.string();
  }
  // Creates the parent directory.
  std::string output(const std::string& rel) {
    const fs::path p = path(rel);
    fs::create_directories(p.parent_path());
    outputs[rel] = "";
    return p.string();
  }

  void write_manifest(const std::string& command) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_hash"] = cfg.hash();
    j["seed"] = s.seed;
    j["config"] = cfg.serialize();
    j["inputs"] = inputs;
    for (auto& [rel, hash] : outputs) hash = file_hash(path(rel).string());
    j["outputs"] = outputs;
    const fs::path p = path("manifests/" + command + ".json");
    fs::create_directories(p.parent_path());
    std::ofstream(p) << j.dump(2) << "\n";
  }
};

std::string model_tag(const Settings& s) { return to_string(s.predictor.variant) + "_" + to_string(s.predictor.task); }
std::string predictor_file(const Settings& s) { return "models/predictor_" + model_tag(s) + ".ckpt"; }
std::string eval_tag(const Settings& s) { return s.eval_split + "_" + model_tag(s); }

struct Data {
  SyntheticDataset ds;
  SplitData split;
};

Data load_data(Run& run) {
  for (const char* f : {"data/trajectories.itj", "data/scenes.scn", "data/split.txt"})
    if (!fs::exists(run.path(f))) throw MissingArtifact(std::string("missing ") + run.path(f).string() + "; run gen-data first");
  Data d;
  d.ds.trajectories = load_trajectories(run.input("data/trajectories.itj"));
  d.ds.scenes = load_scenes(run.input("data/scenes.scn"));
  const SplitSpec spec = load_split(run.input("data/split.txt"));
  d.split = apply_split(d.ds, spec);
  return d;
}

std::vector<SequenceSample> samples_of(const Run& run, const GridBounds& bounds, const TrajectorySet& set,
                                       const std::vector<SceneRecord>& scenes) {
  const Providers p = make_providers(run.s);
  return build_samples(run.s, p, bounds, set, scenes);
}

TrainOptions with_log(TrainOptions o, Run& run, const std::string& stage) {
  o.log_path = run.output("logs/" + stage + ".jsonl");
  o.verbose = true;
  return o;
}

void require_codebook_variant(const Settings& s, const std::string& command) {
  if (!uses_codebook(s.predictor.variant))
    std::fprintf(stderr, "note: %s is not used by variant %s\n", command.c_str(), to_string(s.predictor.variant).c_str());
}

int gen_data(Run& run) {
  const SyntheticDataset ds = generate_dataset(run.s.data);
  const SplitSpec split = make_splits(ds.trajectories, run.s.split_mode, run.s.split_seed);
  save_trajectories(run.output("data/trajectories.itj"), ds.trajectories);
  save_scenes(run.output("data/scenes.scn"), ds.scenes);
  save_split(run.output("data/split.txt"), split);
  std::printf("%zu sequences: %zu train, %zu val, %zu test (%s split)\n", ds.trajectories.size(), split.train.size(),
              split.val.size(), split.test.size(), to_string(split.mode).c_str());
  return 0;
}

int train_codebook_cmd(Run& run) {
  require_codebook_variant(run.s, "train-codebook");
  const Data d = load_data(run);
  const GridBounds bounds = compute_grid_bounds(d.split.train);
  const auto train = samples_of(run, bounds, d.split.train, d.split.train_scenes);
  Settings s = run.s;
  s.train_codebook = with_log(s.train_codebook, run, "codebook");
  auto model = fit_codebook(s, bounds, train);
  save_codebook(run.output("models/codebook.ckpt"), *model, run.cfg);
  const auto rec = summarize(reconstruct(*model, train), train, s.threshold, s.f1_average);
  std::printf("train reconstruction: M-PE %.3f cm, M-PA %.3f cm, F1 %.4f\n", rec.mpjpe, rec.mpjpe_pa, rec.f1);
  return 0;
}

std::unique_ptr<InterCodeModel> need_codebook(Run& run) {
  const std::string rel = "models/codebook.ckpt";
  if (!fs::exists(run.path(rel))) throw MissingArtifact("missing " + run.path(rel).string() + "; run train-codebook first");
  return load_codebook(run.input(rel));
}

std::unique_ptr<IndexerModel> need_indexer(Run& run) {
  const std::string rel = "models/indexer.ckpt";
  if (!fs::exists(run.path(rel))) throw MissingArtifact("missing " + run.path(rel).string() + "; run train-indexer first");
  return load_indexer(run.input(rel));
}

int train_indexer_cmd(Run& run) {
  require_codebook_variant(run.s, "train-indexer");
  const Data d = load_data(run);
  auto codebook = need_codebook(run);
  const auto train = samples_of(run, codebook->bounds(), d.split.train, d.split.train_scenes);
  Settings s = run.s;
  s.train_indexer = with_log(s.train_indexer, run, "indexer");
  auto model = fit_indexer(s, *codebook, train);
  save_indexer(run.output("models/indexer.ckpt"), *model, run.cfg);
  const auto acc = index_accuracy(*model, train, tokenize(*codebook, train));
  std::printf("train index accuracy: top-1 %.4f, top-5 %.4f\n", acc.top1, acc.top5);
  return 0;
}

int train_predictor_cmd(Run& run) {
  const Data d = load_data(run);
  TrainedModels m;
  GridBounds bounds = compute_grid_bounds(d.split.train);
  if (uses_codebook(run.s.predictor.variant)) {
    m.codebook = need_codebook(run);
    m.indexer = need_indexer(run);
    bounds = m.codebook->bounds();
  }
  const auto train = samples_of(run, bounds, d.split.train, d.split.train_scenes);
  Settings s = run.s;
  s.train_predictor = with_log(s.train_predictor, run, "predictor_" + model_tag(s));
  m.predictor = fit_predictor(s, bounds, m.codebook.get(), m.indexer.get(), train);
  save_predictor(run.output(predictor_file(s)), *m.predictor, run.cfg);
  return 0;
}

TrainedModels load_models(Run& run) {
  TrainedModels m;
  const std::string rel = predictor_file(run.s);
  if (!fs::exists(run.path(rel)))
    throw MissingArtifact("missing " + run.path(rel).string() + "; run train-predictor with variant=" +
                          to_string(run.s.predictor.variant) + " task.mode=" + to_string(run.s.predictor.task) +
                          " first");
  m.predictor = load_predictor(run.input(rel));
  if (uses_codebook(run.s.predictor.variant)) {
    m.codebook = need_codebook(run);
    m.indexer = need_indexer(run);
  }
  return m;
}

int evaluate_cmd(Run& run) {
  const Data d = load_data(run);
  TrainedModels m = load_models(run);
  const auto eval = samples_of(run, m.predictor->bounds(), d.split.eval_set(run.s.eval_split),
                               d.split.eval_scenes(run.s.eval_split));
  if (eval.empty()) throw InvalidArgument("split '" + run.s.eval_split + "' is empty");
  const auto preds = predict(run.s, m, eval);
  const MetricsSummary summary = evaluate_predictions(run.s, preds, eval);
  const std::string table = format_metrics_table({{run.s.eval_split + " / " + to_string(run.s.predictor.task) + " / " +
                                                       to_string(run.s.predictor.variant),
                                                   summary}});
  std::ofstream(run.output("eval/metrics_" + eval_tag(run.s) + ".md")) << table;
  save_predictions(run.output("eval/predictions_" + eval_tag(run.s) + ".ckpt"), preds, run.cfg);
  std::fputs(table.c_str(), stdout);
  return 0;
}

int sweep_cmd(Run& run) {
  const Data d = load_data(run);
  const GridBounds bounds = compute_grid_bounds(d.split.train);
  const auto train = samples_of(run, bounds, d.split.train, d.split.train_scenes);
  const auto eval =
      samples_of(run, bounds, d.split.eval_set(run.s.eval_split), d.split.eval_scenes(run.s.eval_split));
  const std::string rel = "sweep/sweep_" + eval_tag(run.s) + ".tsv";
  std::ofstream out(run.output(rel));
  out << "fraction\tseed\ttrain_sequences\tmpjpe_cm\tmedian_mpjpe_cm\tmpjpe_pa_cm\tf1\n";
  scale_sweep(run.s, bounds, train, eval, [&](const SweepRecord& r) {
    char line[256];
    std::snprintf(line, sizeof line, "%.4g\t%llu\t%d\t%.4f\t%.4f\t%.4f\t%.4f\n", r.fraction,
                  static_cast<unsigned long long>(r.seed), r.train_sequences, r.metrics.mpjpe, r.metrics.median_mpjpe,
                  r.metrics.mpjpe_pa, r.metrics.f1);
    out << line << std::flush;
    std::fputs(line, stdout);
  });
  return 0;
}

// Rotation by `yaw` about the camera's vertical axis through `center`.
Points3 yaw_about(const Points3& p, const Vec3& center, double yaw) {
  const Mat3 R = axis_angle_matrix<double>(Vec3::UnitY(), yaw);
  Points3 out(p.rows(), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i) out.row(i) = (R * (p.row(i).transpose() - center) + center).transpose();
  return out;
}

int export_viz_cmd(Run& run) {
  const std::string rel = "eval/predictions_" + eval_tag(run.s) + ".ckpt";
  if (!fs::exists(run.path(rel))) throw MissingArtifact("missing " + run.path(rel).string() + "; run evaluate first");
  const auto preds = load_predictions(run.input(rel));
  const Data d = load_data(run);
  if (run.s.viz_sequence < 0 || run.s.viz_sequence >= static_cast<int>(preds.size()))
    throw InvalidArgument("viz.sequence " + std::to_string(run.s.viz_sequence) + " is outside the " +
                          std::to_string(preds.size()) + " evaluated sequences");
  const SequencePrediction& pred = preds[static_cast<std::size_t>(run.s.viz_sequence)];
  const InteractionTrajectory* gt = nullptr;
  for (const auto& t : d.ds.trajectories)
    if (t.id == pred.id) gt = &t;
  require(gt != nullptr, "sequence " + pred.id + " is not in the dataset");

  const int T = static_cast<int>(pred.pose.rows());
  std::vector<Points3> frames;
  Vec3 center = Vec3::Zero();
  for (int t = 0; t < T; ++t) {
    const auto pose = HandPoseParams::from_flat(pred.pose.row(t).transpose());
    frames.push_back(forward_kinematics(gt->shape, pose).first.vertices);
    center += frames.back().colwise().mean().transpose() / T;
  }
  // Frame-0 contact point and the reference camera center.
  // Without frame-0 contact the marker sits at the trajectory center.
  Points3 markers(2, 3);
  const auto point = contact_centroid(forward_kinematics(gt->shape, gt->pose(0)).first, gt->contact(0));
  markers.row(0) = (point ? *point : center).transpose();
  markers.row(1).setZero();
  const std::vector<Rgb> marker_colors{kContactColor, Rgb{40, 80, 220}};
  const double yaw = run.s.viz_alt_yaw_deg * M_PI / 180.0;
  const std::string base = "viz/" + pred.id + "/";
  for (const std::string view : {"camera", "alt"}) {
    const bool alt = view == "alt";
    for (int t = 0; t < T; ++t) {
      char name[64];
      std::snprintf(name, sizeof name, "frame_%03d.ply", t);
      write_ply(run.output(base + view + "/" + name), alt ? yaw_about(frames[t], center, yaw) : frames[t],
                *default_rig().faces, contact_colors(pred.contact_prob.row(t), run.s.threshold));
    }
    write_ply(run.output(base + view + "/markers.ply"), alt ? yaw_about(markers, center, yaw) : markers, Faces(0, 3),
              marker_colors);
  }
  std::printf("wrote %d frames x 2 views for %s under %s\n", T, pred.id.c_str(), run.path(base).string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hand-object interaction trajectory prediction"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  const std::map<std::string, int (*)(Run&)> commands{
      {"gen-data", gen_data},         {"train-codebook", train_codebook_cmd}, {"train-indexer", train_indexer_cmd},
      {"train-predictor", train_predictor_cmd}, {"evaluate", evaluate_cmd},   {"sweep-scale", sweep_cmd},
      {"export-viz", export_viz_cmd}};
  const std::map<std::string, std::string> help{
      {"gen-data", "generate the synthetic dataset and its split"},
      {"train-codebook", "train the interaction codebook"},
      {"train-indexer", "train the indexer against a trained codebook"},
      {"train-predictor", "train the configured predictor variant"},
      {"evaluate", "metrics table and prediction dump on the evaluation split"},
      {"sweep-scale", "retrain on fractions of the training set and evaluate"},
      {"export-viz", "PLY meshes of one evaluated sequence, camera and alternate view"}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("-c,--config", config_path, "config file")->check(CLI::ExistingFile);
    sub->add_option("overrides", overrides, "key=value overrides");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Run run;
  try {
    run.cfg = config_path.empty() ? Config{} : Config::load(config_path);
    for (const auto& o : overrides) run.cfg.apply_override(o);
    run.s = settings_from(run.cfg);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  const char* root = std::getenv(kRootEnv);
  const fs::path out_dir(run.s.output_dir);
  run.dir = out_dir.is_absolute() ? out_dir : fs::path(root && *root ? root : ".") / out_dir;

  try {
    fs::create_directories(run.dir);
    const int rc = commands.at(command)(run);
    run.write_manifest(command);
    return rc;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

#include "intertraj/pipeline/artifacts.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "intertraj/pipeline/settings.hpp"

namespace intertraj {

namespace {

ad::Tensor<double> bounds_tensor(const GridBounds& b) {
  ad::Tensor<double> t(2, 3);
  t.row(0) = b.min_xyz.transpose();
  t.row(1) = b.max_xyz.transpose();
  return t;
}

GridBounds bounds_from(const Checkpoint& ck) {
  const auto t = ck.get<double>("bounds");
  if (t.rows() != 2 || t.cols() != 3) throw FormatError("checkpoint bounds must be 2 x 3");
  GridBounds b;
  b.min_xyz = t.row(0).transpose();
  b.max_xyz = t.row(1).transpose();
  b.validate();
  return b;
}

Checkpoint start(const std::string& kind, const Config& cfg, const GridBounds& bounds) {
  Checkpoint ck;
  ck.meta["kind"] = kind;
  ck.meta["config"] = cfg.serialize();
  ck.meta["config_hash"] = cfg.hash();
  ck.put("bounds", bounds_tensor(bounds));
  return ck;
}

Checkpoint open(const std::string& path, const std::string& kind, Config& cfg) {
  if (!std::filesystem::is_regular_file(path)) throw MissingArtifact(kind + " artifact not found: " + path);
  Checkpoint ck = Checkpoint::load(path);
  if (ck.meta_at("kind") != kind)
    throw FormatError(path + ": expected a " + kind + " artifact, found '" + ck.meta_at("kind") + "'");
  cfg = Config::parse(ck.meta_at("config"), path);
  return ck;
}

}  // namespace

void save_codebook(const std::string& path, InterCodeModel& model, const Config& cfg) {
  require(model.codebook().initialized(), "save_codebook: the codebook has not been trained");
  Checkpoint ck = start("codebook", cfg, model.bounds());
  ck.put_parameters(model.parameters());
  const auto& rvq = model.codebook();
  for (int q = 0; q < rvq.layers(); ++q) {
    const std::string p = "rvq." + std::to_string(q);
    ck.put(p + ".codewords", rvq.codewords(q));
    ck.put(p + ".counts", ad::Tensor<double>(rvq.counts(q).transpose()));
    ck.put(p + ".sums", ad::Tensor<double>(rvq.sums(q)));
  }
  ck.save(path);
}

std::unique_ptr<InterCodeModel> load_codebook(const std::string& path, Config* cfg_out) {
  Config cfg;
  const Checkpoint ck = open(path, "codebook", cfg);
  const Settings s = settings_from(cfg);
  auto model = std::make_unique<InterCodeModel>(s.codebook, bounds_from(ck), s.seed);
  ck.get_parameters(model->parameters());
  for (int q = 0; q < model->codebook().layers(); ++q) {
    const std::string p = "rvq." + std::to_string(q);
    model->codebook().restore(q, ck.get<Real>(p + ".codewords"),
                              ck.get<double>(p + ".counts").row(0).transpose(), ck.get<double>(p + ".sums"));
  }
  if (cfg_out) *cfg_out = cfg;
  return model;
}

void save_indexer(const std::string& path, IndexerModel& model, const Config& cfg) {
  Checkpoint ck = start("indexer", cfg, model.bounds());
  ck.put_parameters(model.parameters());
  ck.save(path);
}

std::unique_ptr<IndexerModel> load_indexer(const std::string& path, Config* cfg_out) {
  Config cfg;
  const Checkpoint ck = open(path, "indexer", cfg);
  const Settings s = settings_from(cfg);
  auto model = std::make_unique<IndexerModel>(s.indexer, bounds_from(ck), s.seed + 11);
  ck.get_parameters(model->parameters());
  if (cfg_out) *cfg_out = cfg;
  return model;
}

void save_predictor(const std::string& path, PredictorModel& model, const Config& cfg) {
  Checkpoint ck = start("predictor", cfg, model.bounds());
  ck.meta["variant"] = to_string(model.config().variant);
  ck.meta["task"] = to_string(model.config().task);
  ck.put_parameters(model.parameters());
  ad::Tensor<double> scale(1, 1);
  scale(0, 0) = model.latent_scale();
  ck.put("latent_scale", scale);
  ck.save(path);
}

std::unique_ptr<PredictorModel> load_predictor(const std::string& path, Config* cfg_out) {
  Config cfg;
  const Checkpoint ck = open(path, "predictor", cfg);
  const Settings s = settings_from(cfg);
  auto model = std::make_unique<PredictorModel>(s.predictor, bounds_from(ck), s.seed + 23);
  ck.get_parameters(model->parameters());
  model->set_latent_scale(ck.get<double>("latent_scale")(0, 0));
  if (cfg_out) *cfg_out = cfg;
  return model;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot read " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void save_predictions(const std::string& path, const std::vector<SequencePrediction>& preds, const Config& cfg) {
  Checkpoint ck;
  ck.meta["kind"] = "predictions";
  ck.meta["config"] = cfg.serialize();
  ck.meta["config_hash"] = cfg.hash();
  std::string ids;
  for (const auto& p : preds) {
    require(p.id.find('\n') == std::string::npos, "save_predictions: ids must not contain newlines");
    ids += p.id + "\n";
    ck.put<double>(p.id + ".pose", p.pose);
    ck.put<double>(p.id + ".contact_prob", p.contact_prob);
  }
  ck.meta["ids"] = ids;
  ck.save(path);
}

std::vector<SequencePrediction> load_predictions(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw MissingArtifact("prediction dump not found: " + path);
  const Checkpoint ck = Checkpoint::load(path);
  if (ck.meta_at("kind") != "predictions")
    throw FormatError(path + ": expected a predictions artifact, found '" + ck.meta_at("kind") + "'");
  std::vector<SequencePrediction> out;
  std::stringstream ss(ck.meta_at("ids"));
  std::string id;
  while (std::getline(ss, id)) {
    if (id.empty()) continue;
    out.push_back({id, ck.get<double>(id + ".pose"), ck.get<double>(id + ".contact_prob")});
  }
  return out;
}

}  // namespace intertraj

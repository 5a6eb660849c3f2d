#include "intertraj/core/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "intertraj/conditioning/providers.hpp"

namespace intertraj {

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "0", "master seed for model initialization and training"},
      {"horizon", "30", "trajectory length T"},
      {"data.sequences", "480", "number of synthetic sequences"},
      {"data.actions", "24", "number of action categories"},
      {"data.objects", "10", "number of object categories"},
      {"data.scenes", "2", "number of scenes (1 or 2)"},
      {"data.minority_scene_fraction", "0.15", "share of sequences recorded in the second scene"},
      {"data.jitter", "1.0", "scale of per-sequence random perturbations"},
      {"data.seed", "0", "generator seed"},
      {"split.mode", "task", "task | object | action | scene"},
      {"split.seed", "0", "split shuffling seed"},
      {"task.mode", "forecasting", "forecasting | interpolation"},
      {"hand_visibility", "visible", "visible | no_hand"},
      {"variant", "ltf", "ltf | ldiff | ctf | cdiff"},
      {"use_contact_loss", "true", "include the contact-map BCE term"},
      {"provider.text", "hash", "hash | table:<path>"},
      {"provider.image", "synthetic", "synthetic | table:<path>"},
      {"provider.seed", "0", "seed of the synthetic providers"},
      {"model.width", "512", "decoder width"},
      {"model.ffn", "1024", "decoder feed-forward width"},
      {"model.dropout", "0.2", "decoder dropout"},
      {"model.encoder_ffn", "1024", "encoder feed-forward width"},
      {"model.encoder_dropout", "0.1", "encoder dropout"},
      {"codebook.K", "512", "entries per quantizer layer"},
      {"codebook.E", "512", "codeword and encoder width"},
      {"codebook.Q", "6", "residual quantizer layers"},
      {"codebook.gumbel_temp", "0.5", "Gumbel-softmax temperature"},
      {"codebook.ema_decay", "0.99", "EMA decay of codebook statistics"},
      {"codebook.dead_threshold", "1.0", "EMA count below which an entry is re-seeded"},
      {"codebook.commitment", "0.25", "commitment loss weight (0 disables)"},
      {"contact.sigma_voxels", "1.0", "heatmap standard deviation in voxels"},
      {"contact.channels", "8,16,32,32", "contact encoder channels"},
      {"contact.strides", "1,2,2,1", "contact encoder strides"},
      {"contact.threshold", "0.5", "probability threshold for contact F1"},
      {"contact.f1_average", "micro", "micro | macro"},
      {"loss.w_articulation", "1.0", "weight of the articulation term"},
      {"loss.w_centroid", "1.0", "weight of the contact-centroid term"},
      {"loss.w_translation", "1.0", "weight of the translation term"},
      {"loss.w_rotation", "1.0", "weight of the global-rotation term"},
      {"loss.w_contact", "1.0", "weight of the contact BCE term"},
      {"train.lr", "1e-4", "Adam learning rate"},
      {"train.lr_schedule", "constant", "constant | cosine (decays to 1% of train.lr)"},
      {"train.batch", "32", "sequences per batch"},
      {"train.clip", "1.0", "gradient-norm clip"},
      {"train.epochs_codebook", "200", "codebook training epochs"},
      {"train.epochs_indexer", "200", "indexer training epochs"},
      {"train.epochs_predictor", "200", "predictor training epochs"},
      {"indexer.hidden", "1024,512", "indexer input MLP widths (last is the decoder width)"},
      {"indexer.ffn", "1024", "indexer decoder feed-forward width"},
      {"indexer.dropout", "0.1", "indexer decoder dropout"},
      {"diffusion.steps", "50", "diffusion steps N"},
      {"diffusion.x0_weight", "1.0", "weight of the L2 loss on the denoised estimate"},
      {"eval.retrieval", "argmax", "argmax | sample"},
      {"eval.split", "test", "train | val | test"},
      {"eval.seed", "0", "seed for sampled retrieval and diffusion noise"},
      {"sweep.fractions", "0.25,0.5,0.75,1.0", "training-set fractions"},
      {"sweep.seeds", "0,1,2", "seeds per fraction"},
      {"viz.sequence", "0", "index of the sequence within the evaluation split"},
      {"viz.alt_yaw_deg", "60", "yaw of the alternate view about the trajectory center"},
      {"output.dir", "runs/default", "artifact directory (relative to the output root)"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("config file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  Config c;
  c.parse_into(ss.str(), path, std::filesystem::path(path).parent_path().string(), 0);
  return c;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  c.parse_into(text, origin, ".", 0);
  return c;
}

void Config::parse_into(const std::string& text, const std::string& origin, const std::string& base_dir, int depth) {
  if (depth > 16) throw InvalidArgument(origin + ": include nesting too deep");
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.rfind("include", 0) == 0 && (line.size() == 7 || line[7] == ' ' || line[7] == '\t')) {
      const std::string rel = trim(line.substr(7));
      if (rel.empty()) throw InvalidArgument(where + ": include needs a path");
      const auto path = std::filesystem::path(base_dir.empty() ? "." : base_dir) / rel;
      std::ifstream in(path);
      if (!in) throw MissingArtifact(where + ": included file not found: " + path.string());
      std::stringstream inc;
      inc << in.rdbuf();
      parse_into(inc.str(), path.string(), path.parent_path().string(), depth + 1);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument(where + ": expected `key = value`");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + ": " + e.what());
    }
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw InvalidArgument("unknown config key '" + key + "'");
  values_[key] = value;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw InvalidArgument("override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& Config::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument("unknown config key '" + key + "'");
  return it->second;
}

long Config::integer(const std::string& key) const {
  const auto& v = str(key);
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "' expects an integer, got '" + v + "'");
}

double Config::real(const std::string& key) const {
  const auto& v = str(key);
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "' expects a number, got '" + v + "'");
}

bool Config::boolean(const std::string& key) const {
  const auto& v = str(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidArgument("config key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(str(key))) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InvalidArgument("config key '" + key + "' expects a list of numbers, got '" + str(key) + "'");
    }
  }
  return out;
}

std::vector<long> Config::integers(const std::string& key) const {
  std::vector<long> out;
  for (const auto& item : split_list(str(key))) {
    try {
      std::size_t used = 0;
      out.push_back(std::stol(item, &used));
      if (used != item.size()) throw InvalidArgument("");
    } catch (const std::exception&) {
      throw InvalidArgument("config key '" + key + "' expects a list of integers, got '" + str(key) + "'");
    }
  }
  return out;
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& k : config_schema()) out += k.name + " = " + values_.at(k.name) + "\n";
  return out;
}

std::string Config::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(stable_hash(serialize())));
  return buf;
}

}  // namespace intertraj

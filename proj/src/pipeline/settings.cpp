#include "intertraj/pipeline/settings.hpp"

namespace intertraj {

namespace {

std::vector<Eigen::Index> to_index(const std::vector<long>& v) { return {v.begin(), v.end()}; }

std::vector<int> to_int(const std::vector<long>& v) { return {v.begin(), v.end()}; }

TrainOptions train_options(const Config& cfg, const std::string& epochs_key, std::uint64_t seed) {
  TrainOptions o;
  o.epochs = static_cast<int>(cfg.integer(epochs_key));
  o.batch = static_cast<int>(cfg.integer("train.batch"));
  o.lr = cfg.real("train.lr");
  o.clip = cfg.real("train.clip");
  o.seed = seed;
  const std::string schedule = cfg.str("train.lr_schedule");
  require(schedule == "constant" || schedule == "cosine", "train.lr_schedule must be constant or cosine");
  o.cosine = schedule == "cosine";
  require(o.epochs >= 0, epochs_key + " must be non-negative");
  require(o.batch >= 1, "train.batch must be positive");
  require(o.lr > 0.0, "train.lr must be positive");
  require(o.clip > 0.0, "train.clip must be positive");
  return o;
}

}  // namespace

Settings settings_from(const Config& cfg) {
  Settings s;
  s.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  const int T = static_cast<int>(cfg.integer("horizon"));
  require(T >= 2, "horizon must be at least 2");

  s.data.sequences = static_cast<int>(cfg.integer("data.sequences"));
  s.data.horizon = T;
  s.data.actions = static_cast<int>(cfg.integer("data.actions"));
  s.data.objects = static_cast<int>(cfg.integer("data.objects"));
  s.data.scenes = static_cast<int>(cfg.integer("data.scenes"));
  s.data.minority_scene_fraction = cfg.real("data.minority_scene_fraction");
  s.data.jitter = cfg.real("data.jitter");
  s.data.seed = static_cast<std::uint64_t>(cfg.integer("data.seed"));
  s.data.validate();

  s.split_mode = parse_split_mode(cfg.str("split.mode"));
  s.split_seed = static_cast<std::uint64_t>(cfg.integer("split.seed"));

  const std::string vis = cfg.str("hand_visibility");
  if (vis == "visible") {
    s.samples.visibility = HandVisibility::Visible;
  } else if (vis == "no_hand") {
    s.samples.visibility = HandVisibility::NoHand;
  } else {
    throw InvalidArgument("hand_visibility must be visible or no_hand, got '" + vis + "'");
  }
  s.text_provider = cfg.str("provider.text");
  s.image_provider = cfg.str("provider.image");
  s.provider_seed = static_cast<std::uint64_t>(cfg.integer("provider.seed"));

  ContactEncoderDims contact;
  contact.channels = to_int(cfg.integers("contact.channels"));
  contact.strides = to_int(cfg.integers("contact.strides"));
  require(contact.channels.size() == contact.strides.size() && !contact.channels.empty(),
          "contact.channels and contact.strides must have the same non-zero length");
  for (int c : contact.channels) require(c >= 1, "contact.channels must be positive");
  for (int st : contact.strides) require(st == 1 || st == 2, "contact.strides must be 1 or 2");
  const double sigma = cfg.real("contact.sigma_voxels");

  LossWeights w;
  w.articulation = cfg.real("loss.w_articulation");
  w.centroid = cfg.real("loss.w_centroid");
  w.translation = cfg.real("loss.w_translation");
  w.rotation = cfg.real("loss.w_rotation");
  w.contact = cfg.real("loss.w_contact");
  const bool contact_loss = cfg.boolean("use_contact_loss");

  const ad::TransformerDims decoder{cfg.integer("model.width"), cfg.integer("model.ffn"), cfg.real("model.dropout")};

  auto& cb = s.codebook;
  cb.horizon = T;
  cb.rvq.K = static_cast<int>(cfg.integer("codebook.K"));
  cb.rvq.E = static_cast<int>(cfg.integer("codebook.E"));
  cb.rvq.Q = static_cast<int>(cfg.integer("codebook.Q"));
  cb.rvq.gumbel_temp = cfg.real("codebook.gumbel_temp");
  cb.rvq.ema_decay = cfg.real("codebook.ema_decay");
  cb.rvq.dead_threshold = cfg.real("codebook.dead_threshold");
  cb.commitment = cfg.real("codebook.commitment");
  cb.encoder_ffn = cfg.integer("model.encoder_ffn");
  cb.encoder_dropout = cfg.real("model.encoder_dropout");
  cb.decoder = decoder;
  cb.contact = contact;
  cb.sigma_voxels = sigma;
  cb.weights = w;
  cb.use_contact_loss = contact_loss;
  cb.validate();

  auto& ix = s.indexer;
  ix.horizon = T;
  ix.K = cb.rvq.K;
  ix.Q = cb.rvq.Q;
  ix.hidden = to_index(cfg.integers("indexer.hidden"));
  ix.ffn = cfg.integer("indexer.ffn");
  ix.dropout = cfg.real("indexer.dropout");
  ix.contact = contact;
  ix.sigma_voxels = sigma;
  ix.validate();

  auto& pr = s.predictor;
  pr.horizon = T;
  pr.variant = parse_variant(cfg.str("variant"));
  pr.task = parse_task_mode(cfg.str("task.mode"));
  pr.latent_dims = cb.rvq.E;
  pr.decoder = decoder;
  pr.contact = contact;
  pr.sigma_voxels = sigma;
  pr.weights = w;
  pr.use_contact_loss = contact_loss;
  pr.diffusion_steps = static_cast<int>(cfg.integer("diffusion.steps"));
  pr.x0_weight = cfg.real("diffusion.x0_weight");
  pr.validate();

  s.train_codebook = train_options(cfg, "train.epochs_codebook", s.seed);
  s.train_indexer = train_options(cfg, "train.epochs_indexer", s.seed + 1);
  s.train_predictor = train_options(cfg, "train.epochs_predictor", s.seed + 2);

  s.retrieval = parse_retrieval_mode(cfg.str("eval.retrieval"));
  s.eval_split = cfg.str("eval.split");
  require(s.eval_split == "train" || s.eval_split == "val" || s.eval_split == "test",
          "eval.split must be train, val or test");
  s.eval_seed = static_cast<std::uint64_t>(cfg.integer("eval.seed"));
  s.threshold = cfg.real("contact.threshold");
  require(s.threshold > 0.0 && s.threshold < 1.0, "contact.threshold must lie in (0, 1)");
  const std::string avg = cfg.str("contact.f1_average");
  if (avg == "micro") {
    s.f1_average = F1Average::Micro;
  } else if (avg == "macro") {
    s.f1_average = F1Average::Macro;
  } else {
    throw InvalidArgument("contact.f1_average must be micro or macro, got '" + avg + "'");
  }
  s.sweep_fractions = cfg.reals("sweep.fractions");
  for (double f : s.sweep_fractions) require(f > 0.0 && f <= 1.0, "sweep.fractions must lie in (0, 1]");
  for (long v : cfg.integers("sweep.seeds")) s.sweep_seeds.push_back(static_cast<std::uint64_t>(v));
  require(!s.sweep_fractions.empty() && !s.sweep_seeds.empty(), "sweep needs fractions and seeds");
  s.viz_sequence = static_cast<int>(cfg.integer("viz.sequence"));
  s.viz_alt_yaw_deg = cfg.real("viz.alt_yaw_deg");
  s.output_dir = cfg.str("output.dir");
  return s;
}

}  // namespace intertraj

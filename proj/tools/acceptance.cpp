// Acceptance runner: one PASS/FAIL line per criterion.
//
//   intertraj_acceptance [--only 1,2,...] [--configs DIR]
//
// Criteria 6, 7, 8 (report part) and 11 train models from the profiles in
// configs/; the rest are property checks that finish in seconds.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "intertraj/codebook/encoder.hpp"
#include "intertraj/codebook/rvq.hpp"
#include "intertraj/engine/geometry.hpp"
#include "intertraj/hand/hand_model.hpp"
#include "intertraj/hand/rig.hpp"
#include "intertraj/hand/rotation.hpp"
#include "intertraj/metrics/metrics.hpp"
#include "intertraj/model/decoder.hpp"
#include "intertraj/model/loss.hpp"
#include "intertraj/pipeline/pipeline.hpp"

using namespace intertraj;
using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

// Pinned tolerances.
constexpr double kMpjpeOracleTol = 1e-9;
constexpr double kPlantedPaTol = 1e-5;    // cm
constexpr double kF1Tol = 1e-15;
constexpr double kFastRuntime = 10.0;     // s
constexpr double kEmaTol = 1e-3;
constexpr int kEmaSteps = 500;
constexpr double kGradTol = 1e-3;
constexpr double kOverfitRecon = 1.0;     // cm
constexpr double kOverfitF1 = 0.95;
constexpr double kOverfitTop1 = 0.90;
constexpr double kOverfitE2E = 1.5;       // cm
constexpr double kOverfitRuntime = 1800.0;
constexpr double kBaselineMargin = 0.20;
constexpr int kMinTable4Sequences = 500;
constexpr int kSplitCases = 1000;
constexpr double kDriftTol = 1e-9;        // m
constexpr double kSweepInversion = 0.05;
constexpr int kSweepSequences = 1000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point t0) { return seconds_since(t0); }

std::string config_dir;

Config profile(const std::string& name) { return Config::load(config_dir + "/" + name); }

// Dataset, task split and per-split samples of a configuration.
struct Prepared {
  Settings s;
  GridBounds bounds;
  std::vector<SequenceSample> train, test;
  int dataset_size = 0;
};

Prepared prepare(const Config& cfg) {
  Prepared p;
  p.s = settings_from(cfg);
  p.s.train_codebook.verbose = p.s.train_indexer.verbose = p.s.train_predictor.verbose = false;
  const auto ds = generate_dataset(p.s.data);
  p.dataset_size = static_cast<int>(ds.trajectories.size());
  const auto split = apply_split(ds, make_splits(ds.trajectories, p.s.split_mode, p.s.split_seed));
  p.bounds = compute_grid_bounds(split.train);
  const auto prov = make_providers(p.s);
  p.train = build_samples(p.s, prov, p.bounds, split.train, split.train_scenes);
  p.test = build_samples(p.s, prov, p.bounds, split.eval_set(p.s.eval_split), split.eval_scenes(p.s.eval_split));
  return p;
}

MetricsSummary run_variant(const Prepared& p, PredictorVariant v, std::uint64_t seed) {
  Settings s = with_seed(p.s, seed);
  s.predictor.variant = v;
  TrainedModels m = train_all(s, p.bounds, p.train);
  return evaluate_predictions(s, predict(s, m, p.test), p.test);
}

// ---------------------------------------------------------------- 1: metrics

JointRows random_joints(int T, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.1);
  JointRows j(T, 3 * kNumJoints);
  for (Eigen::Index i = 0; i < j.size(); ++i) j.data()[i] = n(rng);
  return j;
}

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat3 a;
  for (int i = 0; i < 9; ++i) a.data()[i] = n(rng);
  Mat3 q = Eigen::HouseholderQR<Mat3>(a).householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

double loop_mpjpe(const JointRows& a, const JointRows& b) {
  double total = 0.0;
  int count = 0;
  for (Eigen::Index t = 0; t < a.rows(); ++t)
    for (int j = 0; j < kNumJoints; ++j) {
      double sq = 0.0;
      for (int c = 0; c < 3; ++c) sq += std::pow(a(t, 3 * j + c) - b(t, 3 * j + c), 2);
      total += std::sqrt(sq);
      ++count;
    }
  return 100.0 * total / count;
}

Outcome metric_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  double oracle = 0.0, planted = 0.0, pa_excess = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const auto a = random_joints(10, rng), b = random_joints(10, rng);
    oracle = std::max(oracle, std::abs(mpjpe(a, b) - loop_mpjpe(a, b)));
    pa_excess = std::max(pa_excess, mpjpe_pa(a, b) - mpjpe(a, b));
  }
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::normal_distribution<double> n(0.0, 0.5);
  for (int i = 0; i < 100; ++i) {
    const auto gt = random_joints(8, rng);
    const double s = scale(rng);
    const Mat3 R = random_rotation(rng);
    const Vec3 t(n(rng), n(rng), n(rng));
    JointRows pred = gt;
    for (Eigen::Index r = 0; r < gt.rows(); ++r)
      for (int j = 0; j < kNumJoints; ++j)
        pred.row(r).segment<3>(3 * j) = (s * R * gt.row(r).segment<3>(3 * j).transpose() + t).transpose();
    planted = std::max(planted, mpjpe_pa(pred, gt));
  }

  // Confusion-matrix oracle on random masks, then the P=1, R=0.5 case.
  bool counts_ok = true;
  double f1_err = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd p(4, kNumVertices), g(4, kNumVertices);
    long tp = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      p.data()[i] = u(rng);
      g.data()[i] = u(rng) < 0.2 ? 1.0 : 0.0;
      const bool pp = p.data()[i] >= 0.5, gg = g.data()[i] > 0.5;
      tp += pp && gg;
      fp += pp && !gg;
      fn += !pp && gg;
    }
    const auto c = contact_counts(p, g);
    counts_ok = counts_ok && c.tp == tp && c.fp == fp && c.fn == fn;
    f1_err = std::max(f1_err, std::abs(contact_f1(p, g) - 2.0 * tp / double(2 * tp + fp + fn)));
  }
  Eigen::MatrixXd gt = Eigen::MatrixXd::Zero(2, kNumVertices), half = gt;
  gt.row(0).head(10).setOnes();
  gt.row(1).segment(100, 10).setOnes();
  half.row(0).head(5).setConstant(0.9);
  half.row(1).segment(100, 5).setConstant(0.7);
  const auto hc = contact_counts(half, gt);
  const bool pr_case = hc.precision() == 1.0 && hc.recall() == 0.5 && std::abs(contact_f1(half, gt) - 2.0 / 3.0) <= kF1Tol;
  f1_err = std::max(f1_err, std::abs(contact_f1(half, gt) - 2.0 / 3.0));
  const double secs = elapsed(t0);

  Outcome o;
  o.pass = oracle < kMpjpeOracleTol && planted < kPlantedPaTol && pa_excess <= 1e-12 && counts_ok &&
           f1_err <= kF1Tol && pr_case && secs < kFastRuntime;
  o.detail = fmt("loop oracle %.1e, planted PA %.1e cm, max(PA-MPJPE) %.1e, counts %s, F1 err %.1e, %.2fs", oracle,
                 planted, pa_excess, counts_ok ? "exact" : "MISMATCH", f1_err, secs);
  return o;
}

// ---------------------------------------------------------------- 2, 3: VQ

Eigen::MatrixXi brute_force_indices(const ResidualVQ<double>& vq, const Tensor<double>& x) {
  const auto& cfg = vq.config();
  Eigen::MatrixXi idx(x.rows(), cfg.Q);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::RowVectorXd res = x.row(r);
    for (int q = 0; q < cfg.Q; ++q) {
      double best = std::numeric_limits<double>::infinity();
      int arg = -1;
      for (int k = 0; k < cfg.K; ++k) {
        double d = 0.0;
        for (int e = 0; e < cfg.E; ++e) d += std::pow(res(e) - vq.codewords(q)(k, e), 2);
        if (d < best) best = d, arg = k;
      }
      idx(r, q) = arg;
      res -= vq.codewords(q).row(arg);
    }
  }
  return idx;
}

Outcome vq_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(11);
  ResidualVQ<double> vq(RvqConfig{16, 8, 3}, rng);
  const auto x = testing::random_tensor(1000, 8, rng);
  const auto q = vq.quantize_eval(x);
  const long mismatches = (q.indices.array() != brute_force_indices(vq, x).array()).count();

  // Error after each of Q = 1..6 layers of an initialized quantizer.
  const auto y = testing::random_tensor(400, 8, rng);
  ResidualVQ<double> deep(RvqConfig{32, 8, 6}, rng);
  deep.initialize(y, rng);
  const auto full = deep.quantize_eval(y);
  std::vector<double> errs{y.norm()};
  bool monotone = true;
  for (int l = 0; l < 6; ++l) {
    // Quantizing with Q = l + 1 layers equals the first l + 1 layers of the cascade.
    RvqConfig c{32, 8, l + 1};
    ResidualVQ<double> cut(c, rng);
    for (int k = 0; k <= l; ++k) cut.restore(k, deep.codewords(k), deep.counts(k), deep.sums(k));
    const double e = (y - cut.quantize_eval(y).quantized).norm();
    monotone = monotone && e <= errs.back() + 1e-12 && std::abs(e - (y - full.partial[l]).norm()) < 1e-9;
    errs.push_back(e);
  }
  const double secs = elapsed(t0);
  std::ostringstream curve;
  for (std::size_t i = 1; i < errs.size(); ++i) curve << (i > 1 ? "," : "") << fmt("%.2f", errs[i]);
  return {mismatches == 0 && monotone && secs < kFastRuntime,
          fmt("%ld/3000 index mismatches, error by Q [%s], %.2fs", mismatches, curve.str().c_str(), secs)};
}

Outcome ema_clustering() {
  std::mt19937_64 rng(21);
  const int E = 8;
  Tensor<double> means = Tensor<double>::Zero(4, E);
  for (int k = 0; k < 4; ++k) means(k, k) = 1.0 / std::sqrt(2.0);  // pairwise distance 1.0
  std::normal_distribution<double> noise(0.0, 0.01);
  auto sample = [&](int n) {
    Tensor<double> x(4 * n, E);
    for (int i = 0; i < 4 * n; ++i)
      for (int e = 0; e < E; ++e) x(i, e) = means(i % 4, e) + noise(rng);
    return x;
  };
  ResidualVQ<double> vq(RvqConfig{4, E, 1}, rng);
  vq.initialize(sample(64), rng);
  int reached = -1;
  double worst = 0.0;
  for (int step = 0; step < kEmaSteps; ++step) {
    const auto x = sample(64);
    const auto q = vq.quantize_eval(x);
    vq.ema_update(q.residuals, q.indices, rng);
    worst = 0.0;
    for (int k = 0; k < 4; ++k) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < 4; ++j) best = std::min(best, (vq.codewords(0).row(j) - means.row(k)).norm());
      worst = std::max(worst, best);
    }
    if (worst < kEmaTol && reached < 0) reached = step + 1;
  }
  return {worst < kEmaTol, fmt("max codeword-to-mean distance %.2e after %d steps (first below tol at %d)", worst,
                               kEmaSteps, reached)};
}

// ---------------------------------------------------------------- 4: gradients

Tensor<double> random_pose_rows(Eigen::Index n, std::mt19937_64& rng, double jitter) {
  std::normal_distribution<double> N(0.0, jitter);
  Tensor<double> p(n, kPoseDims);
  const double id[6] = {1, 0, 0, 0, 1, 0};
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int j = 0; j <= kNumArticulated; ++j)
      for (int c = 0; c < 6; ++c) p(r, 6 * j + c) = id[c] + N(rng);
    for (int a = 0; a < 3; ++a) p(r, kGlobalTransOffset + a) = 0.1 * N(rng) / jitter;
  }
  return p;
}

LossTargets<double> random_targets(Eigen::Index n, std::mt19937_64& rng) {
  LossTargets<double> t;
  t.pose = random_pose_rows(n, rng, 0.2);
  std::bernoulli_distribution coin(0.1);
  t.contacts.resize(n, kNumVertices);
  for (Eigen::Index i = 0; i < t.contacts.size(); ++i) t.contacts.data()[i] = coin(rng) ? 1.0 : 0.0;
  t.centroid = testing::random_tensor(n, 3, rng, 0.1);
  for (Eigen::Index r = 0; r < n; r += 2) t.contact_rows.push_back(r);
  t.shape = testing::random_tensor(n, kNumShapeParams, rng, 0.5);
  return t;
}

Outcome gradient_checks() {
  std::vector<std::pair<std::string, double>> errs;
  const int T = 3;
  {
    std::mt19937_64 rng(31);
    TrajectoryEncoder<double> enc(EncoderDims{5, T, {8, 16, 0.0}}, rng);
    ad::ParameterList<double> params;
    enc.collect("enc", params);
    testing::randomize(params, rng, 0.3);
    const Tensor<double> x = testing::random_tensor(2 * T, 5, rng), w = testing::random_tensor(2 * T, 8, rng);
    auto f = [&](Graph<double>& g, const std::vector<Var<double>>& v) {
      return ad::sum(ad::mul(enc(g, v[0]), g.constant(w)));
    };
    errs.emplace_back("encoder", std::max(testing::gradcheck_inputs({x}, f),
                                          testing::gradcheck_params(params, [&](Graph<double>& g) {
                                            return f(g, {g.constant(x)});
                                          })));
  }
  {
    std::mt19937_64 rng(37);
    TrajectoryDecoder<double> dec(DecoderDims{12, T, {8, 16, 0.0}}, rng);
    ad::ParameterList<double> params;
    dec.collect("dec", params);
    testing::randomize(params, rng, 0.3);
    const Tensor<double> joint = testing::random_tensor(2 * T, 12, rng);
    const Tensor<double> wp = testing::random_tensor(2 * T, kPoseDims, rng);
    const Tensor<double> wc = testing::random_tensor(2 * T, kNumVertices, rng);
    auto f = [&](Graph<double>& g, const std::vector<Var<double>>& v) {
      auto out = dec(g, v[0]);
      return ad::add(ad::sum(ad::mul(out.pose, g.constant(wp))), ad::sum(ad::mul(out.contact_logits, g.constant(wc))));
    };
    errs.emplace_back("decoder", std::max(testing::gradcheck_inputs({joint}, f),
                                          testing::gradcheck_params(
                                              params, [&](Graph<double>& g) { return f(g, {g.constant(joint)}); },
                                              1e-5, false, 7, 24)));
  }
  {
    std::mt19937_64 rng(8);
    ContactEncoder<double> enc(rng, ContactEncoderDims{{3, 4, 4, 5}, {1, 2, 2, 1}, 6});
    const GridBounds bounds{Vec3(-0.3, -0.2, 0.2), Vec3(0.3, 0.3, 0.7)};
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
    errs.emplace_back("contact encoder",
                      std::max(testing::gradcheck_sampled(h, f, 40, 6, 1),
                               testing::gradcheck_params(
                                   params, [&](Graph<double>& g) { return f(g, {g.constant(h)}); }, 1e-5, false, 7,
                                   12)));
  }
  {
    std::mt19937_64 rng(23);
    const HandLayer<double> hand;
    const auto tgt = random_targets(2, rng);
    const Tensor<double> pose = random_pose_rows(2, rng, 0.3);
    const Tensor<double> logits = testing::random_tensor(2, kNumVertices, rng, 2.0);
    for (int term = 0; term < kNumLossTerms; ++term) {
      LossWeights w{0, 0, 0, 0, 0};
      double* slot[] = {&w.articulation, &w.centroid, &w.translation, &w.rotation, &w.contact};
      *slot[term] = 1.0;
      errs.emplace_back(std::string("loss:") + loss_term_name(term),
                        testing::gradcheck_inputs({pose, logits}, [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                          return interaction_loss(g, v[0], v[1], tgt, hand, w, true).total;
                        }));
    }
  }
  bool pass = true;
  std::string detail;
  for (const auto& [name, e] : errs) {
    pass = pass && e < kGradTol;
    detail += (detail.empty() ? "" : ", ") + name + fmt(" %.1e", e);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 5: dimensions

Outcome dimensions() {
  const Settings s = settings_from(Config{});
  const GridBounds bounds{Vec3(-0.3, -0.3, 0.2), Vec3(0.3, 0.3, 0.8)};
  InterCodeModel cb(s.codebook, bounds, 0);
  PredictorModel pr(s.predictor, bounds, 0);
  Graph<Real> g(false, 0, false);
  const auto out = cb.decoder()(g, g.constant(Tensor<Real>::Zero(s.codebook.horizon, cb.config().joint_width())));
  const auto& rvq = cb.codebook().config();
  const bool pass = cb.config().joint_width() == 1824 && cb.decoder().dims().in_width == 1824 &&
                    pr.decoder().dims().in_width == 1824 && out.contact_logits.cols() == 778 &&
                    kNumVertices == 778 && cb.coords().rows() == 16 * 16 * 16 && kGridVoxels == 4096 &&
                    rvq.K == 512 && rvq.E == 512 && rvq.Q == 6 && rvq.gumbel_temp == 0.5;
  return {pass, fmt("joint %ld (predictor %ld), contact head %ld, voxels %ld, K/E/Q %d/%d/%d, gumbel %.2f",
                    long(cb.decoder().dims().in_width), long(pr.decoder().dims().in_width),
                    long(out.contact_logits.cols()), long(cb.coords().rows()), rvq.K, rvq.E, rvq.Q, rvq.gumbel_temp)};
}

// ---------------------------------------------------------------- 6: overfit

Outcome overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  Settings s = settings_from(profile("overfit.cfg"));
  s.train_codebook.verbose = s.train_indexer.verbose = s.train_predictor.verbose = false;
  const auto ds = generate_dataset(s.data);
  const GridBounds bounds = compute_grid_bounds(ds.trajectories);
  const auto prov = make_providers(s);
  const auto samples = build_samples(s, prov, bounds, ds.trajectories, ds.scenes);
  TrainedModels m;
  m.codebook = fit_codebook(s, bounds, samples);
  const auto rec = summarize(reconstruct(*m.codebook, samples), samples, s.threshold, s.f1_average);
  m.indexer = fit_indexer(s, *m.codebook, samples);
  const auto acc = index_accuracy(*m.indexer, samples, tokenize(*m.codebook, samples));
  m.predictor = fit_predictor(s, bounds, m.codebook.get(), m.indexer.get(), samples);
  const auto e2e = evaluate_predictions(s, predict(s, m, samples), samples);
  const double secs = elapsed(t0);
  return {static_cast<int>(samples.size()) == 20 && rec.mpjpe < kOverfitRecon && rec.f1 > kOverfitF1 &&
              acc.top1 > kOverfitTop1 && e2e.mpjpe < kOverfitE2E && secs < kOverfitRuntime,
          fmt("%zu sequences: recon %.3f cm F1 %.4f, index top-1 %.3f, ltf end-to-end %.3f cm, %.0fs", samples.size(),
              rec.mpjpe, rec.f1, acc.top1, e2e.mpjpe, secs)};
}

// ---------------------------------------------------------------- 7: two-stage vs single-stage

Outcome two_stage_vs_single() {
  const Prepared p = prepare(profile("table4.cfg"));
  const auto base = summarize(constant_mean_predictions(p.train, p.test), p.test, p.s.threshold, p.s.f1_average);
  int ordered = 0, beat = 0;
  std::string detail = fmt("baseline %.3f cm; ", base.mpjpe);
  for (std::uint64_t seed : p.s.sweep_seeds) {
    const auto ltf = run_variant(p, PredictorVariant::Ltf, seed);
    const auto ctf = run_variant(p, PredictorVariant::Ctf, seed);
    ordered += ltf.mpjpe <= ctf.mpjpe && ltf.f1 >= ctf.f1;
    beat += std::max(ltf.mpjpe, ctf.mpjpe) <= (1.0 - kBaselineMargin) * base.mpjpe;
    detail += fmt("seed %llu ltf %.3f/%.4f ctf %.3f/%.4f; ", static_cast<unsigned long long>(seed), ltf.mpjpe, ltf.f1,
                  ctf.mpjpe, ctf.f1);
    std::fflush(stdout);
  }
  const int n = static_cast<int>(p.s.sweep_seeds.size());
  detail += fmt("ordering %d/%d, both beat baseline by 20%% %d/%d", ordered, n, beat, n);
  return {n >= 3 && p.s.split_mode == SplitMode::Task && p.dataset_size >= kMinTable4Sequences && 2 * ordered > n && 2 * beat > n,
          detail};
}

// ---------------------------------------------------------------- 8: contact-loss flag

// Contact-head parameters after one short training run, next to fresh ones.
bool head_untouched(ad::ParameterList<Real> trained, ad::ParameterList<Real> fresh) {
  bool same = trained.size() == fresh.size() && !trained.empty();
  for (std::size_t i = 0; same && i < trained.size(); ++i)
    same = (trained[i].param->value - fresh[i].param->value).norm() == 0.0f;
  return same;
}

Outcome contact_loss_flag() {
  std::vector<double> mpjpe(2);
  bool structural = true;
  std::string detail;
  for (bool flag : {true, false}) {
    Config cfg = profile("tiny.cfg");
    cfg.set("use_contact_loss", flag ? "true" : "false");
    const Prepared p = prepare(cfg);
    TrainedModels m = train_all(p.s, p.bounds, p.train);
    InterCodeModel fresh_cb(p.s.codebook, p.bounds, p.s.seed);
    PredictorModel fresh_pr(p.s.predictor, p.bounds, p.s.seed + 23);
    ad::ParameterList<Real> a, b, c, d;
    m.codebook->decoder().collect_contact_head("decoder", a);
    fresh_cb.decoder().collect_contact_head("decoder", b);
    m.predictor->collect_contact_head(c);
    fresh_pr.collect_contact_head(d);
    const bool untouched = head_untouched(a, b) && head_untouched(c, d);
    double bce = 0.0;
    for (const auto* h : {&m.codebook_history, &m.predictor_history})
      for (const auto& r : *h) bce = std::max(bce, std::abs(r.terms[kContactTerm]));
    // Off: zero BCE and bit-identical heads. On: the heads move.
    structural = structural && (flag ? !untouched && bce > 0.0 : untouched && bce == 0.0);
    detail += fmt("%s: heads %s, max BCE %.3g; ", flag ? "on" : "off", untouched ? "unchanged" : "updated", bce);
  }
  // Report-only: the MPJPE change on the ablation profile.
  for (bool flag : {true, false}) {
    Config cfg = profile("ablation.cfg");
    cfg.set("use_contact_loss", flag ? "true" : "false");
    const Prepared p = prepare(cfg);
    mpjpe[flag ? 0 : 1] = run_variant(p, PredictorVariant::Ltf, p.s.seed).mpjpe;
  }
  detail += fmt("reported MPJPE with %.3f cm, without %.3f cm", mpjpe[0], mpjpe[1]);
  return {structural, detail};
}

// ---------------------------------------------------------------- 9: splits

TrajectorySet random_label_set(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(60, 400), acts(4, 24), objs(4, 10);
  std::uniform_real_distribution<double> minority(0.1, 0.2);
  const int n = size(rng), A = acts(rng), O = objs(rng);
  std::uniform_int_distribution<int> a(0, A - 1), o(0, O - 1);
  std::bernoulli_distribution scene(minority(rng));
  TrajectorySet set;
  for (int i = 0; i < n; ++i) {
    auto t = InteractionTrajectory::with_horizon(1);
    t.id = "s" + std::to_string(i);
    t.action_label = "a" + std::to_string(a(rng));
    t.object_label = "o" + std::to_string(o(rng));
    t.scene_label = scene(rng) ? "s1" : "s0";
    set.push_back(t);
  }
  return set;
}

Outcome split_protocol() {
  std::mt19937_64 rng(2024);
  std::map<SplitMode, int> checked, failed;
  int infeasible = 0;
  // Draw datasets until every mode has been checked kSplitCases times; some
  // draws admit no held-out label set for a mode and are skipped for it.
  auto done = [&] {
    for (SplitMode m : {SplitMode::Task, SplitMode::Object, SplitMode::Action, SplitMode::Scene})
      if (checked[m] < kSplitCases) return false;
    return true;
  };
  for (int trial = 0; !done() && trial < 10 * kSplitCases; ++trial) {
    const auto set = random_label_set(rng);
    const int n = static_cast<int>(set.size());
    std::map<std::string, const InteractionTrajectory*> by_id;
    for (const auto& t : set) by_id[t.id] = &t;
    for (SplitMode mode : {SplitMode::Task, SplitMode::Object, SplitMode::Action, SplitMode::Scene}) {
      if (checked[mode] >= kSplitCases) continue;
      SplitSpec s;
      try {
        s = make_splits(set, mode, static_cast<std::uint64_t>(trial));
      } catch (const InvalidArgument&) {
        ++infeasible;
        continue;
      }
      ++checked[mode];
      bool ok = true;
      std::set<std::string> train_labels, all;
      for (const auto& id : s.train) train_labels.insert(split_label(*by_id.at(id), mode));
      for (const auto& id : s.test) ok = ok && train_labels.count(split_label(*by_id.at(id), mode)) == 0;
      for (const auto& l : s.held_out) ok = ok && train_labels.count(l) == 0;
      for (const auto* part : {&s.train, &s.val, &s.test})
        for (const auto& id : *part) ok = ok && all.insert(id).second;
      ok = ok && static_cast<int>(all.size()) == n;
      ok = ok && std::abs(double(s.test.size()) - 0.1 * n) <= 1.0 + 1e-9;
      ok = ok && std::abs(double(s.val.size()) - 0.1 * n) <= 1.0 + 1e-9;
      ok = ok && std::abs(double(s.train.size()) - 0.8 * n) <= 1.0 + 1e-9;
      failed[mode] += !ok;
    }
  }
  bool pass = true;
  std::string detail;
  for (SplitMode mode : {SplitMode::Task, SplitMode::Object, SplitMode::Action, SplitMode::Scene}) {
    pass = pass && checked[mode] >= kSplitCases && failed[mode] == 0;
    detail += fmt("%s %d/%d, ", to_string(mode).c_str(), checked[mode] - failed[mode], checked[mode]);
  }
  detail += fmt("%d infeasible draws skipped", infeasible);
  return {pass, detail};
}

// ---------------------------------------------------------------- 10: geometry

Mat3 intrinsics() {
  Mat3 K = Mat3::Identity();
  K(0, 0) = K(1, 1) = 800.0;
  K(0, 2) = 160.0;
  K(1, 2) = 120.0;
  return K;
}

Points3 template_at(const Vec3& offset) {
  const Points3& v = default_rig().template_vertices;
  return v.rowwise() + offset.transpose();
}

Outcome geometry() {
  // Frontal patch: palm rings 3..7 around the vertex facing the camera.
  const Mat3 K = intrinsics();
  const Points3 v = template_at(Vec3(0.0, -0.04, 0.4));
  std::set<int> patch;
  for (int r = 3; r <= 7; ++r)
    for (int k : {11, 12, 13}) patch.insert(r * 16 + k);
  Mask2D region(240, 320);
  for (int i : patch) {
    const auto uv = project(K, v.row(i).transpose());
    region.at(int(std::floor(uv.y())), int(std::floor(uv.x()))) = 1;
  }
  const ContactMap c = backproject_contact(region, v, *default_rig().faces, K);
  std::set<int> marked;
  for (int i = 0; i < kNumVertices; ++i)
    if (c.mask(i)) marked.insert(i);
  const bool exact = marked == patch;

  // Static hand seen from a moving camera.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> ang(-1.0, 1.0);
  const Points3 world = template_at(Vec3(0.02, -0.03, 0.5));
  CameraParams cam;
  cam.K = K;
  for (int t = 0; t < 10; ++t)
    cam.extrinsics.push_back({axis_angle_matrix<double>(Vec3(n(rng), n(rng), n(rng)).normalized(), ang(rng)),
                              Vec3(n(rng), n(rng), n(rng)) * 0.2});
  Points3 first;
  double drift = 0.0;
  for (int t = 0; t < 10; ++t) {
    const Rigid& e = cam.extrinsics[static_cast<std::size_t>(t)];
    const Points3 seen = ((world * e.R.transpose()).rowwise() + e.t.transpose()).eval();
    const Points3 ref = to_reference_frame(seen, cam, t);
    if (t == 0) first = ref;
    drift = std::max(drift, (ref - first).rowwise().norm().maxCoeff());
  }
  return {exact && drift < kDriftTol, fmt("patch %zu vertices, marked %zu (%s), max drift %.1e m", patch.size(),
                                          marked.size(), exact ? "exact" : "DIFFERENT", drift)};
}

// ---------------------------------------------------------------- 11: scale sweep

Outcome scale_curve() {
  const Prepared p = prepare(profile("scale.cfg"));
  std::map<double, std::vector<double>> by_fraction;
  scale_sweep(p.s, p.bounds, p.train, p.test,
              [&](const SweepRecord& r) { by_fraction[r.fraction].push_back(r.metrics.median_mpjpe); });
  std::vector<double> curve;
  std::string detail;
  for (const auto& [f, vals] : by_fraction) {
    double mean = 0.0;
    for (double x : vals) mean += x / double(vals.size());
    curve.push_back(mean);
    detail += fmt("%.0f%% %.3f cm, ", 100 * f, mean);
  }
  int inversions = 0;
  bool small = true;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i] > curve[i - 1]) {
      ++inversions;
      small = small && curve[i] <= (1.0 + kSweepInversion) * curve[i - 1];
    }
  detail += fmt("%d inversion(s) over %zu seeds", inversions, p.s.sweep_seeds.size());
  return {p.s.data.sequences >= kSweepSequences && p.s.sweep_seeds.size() >= 3 && curve.size() == 4 &&
              (inversions == 0 || (inversions == 1 && small)),
          detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intertraj acceptance criteria"};
  std::string only;
  config_dir = INTERTRAJ_CONFIG_DIR;
  app.add_option("--only", only, "comma-separated criterion numbers (default: all)");
  app.add_option("--configs", config_dir, "directory holding the training profiles");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, metric_oracles},  {2, vq_correctness},    {3, ema_clustering},    {4, gradient_checks},
      {5, dimensions},      {6, overfit},           {7, two_stage_vs_single}, {8, contact_loss_flag},
      {9, split_protocol},  {10, geometry},         {11, scale_curve}};
  std::set<int> selected;
  std::stringstream ss(only);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) selected.insert(std::stoi(tok));

  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d %s  %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), elapsed(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

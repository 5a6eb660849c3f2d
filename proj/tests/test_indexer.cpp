#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "intertraj/codebook/intercode.hpp"
#include "intertraj/indexer/indexer.hpp"
#include "intertraj/indexer/train.hpp"

using namespace intertraj;
using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

constexpr int kT = 4;

IndexerConfig small_config(int K = 8, int Q = 3) {
  IndexerConfig c;
  c.horizon = kT;
  c.K = K;
  c.Q = Q;
  c.hidden = {16, 12};
  c.ffn = 24;
  c.contact = testing::tiny_contact();
  return c;
}

InterCodeConfig small_codebook(int K = 8, int Q = 3) {
  InterCodeConfig c;
  c.horizon = kT;
  c.rvq.K = K;
  c.rvq.E = 12;
  c.rvq.Q = Q;
  c.encoder_ffn = 16;
  c.decoder = {12, 16, 0.2};
  c.contact = testing::tiny_contact();
  return c;
}

const testing::SampleFixture& fixture() {
  static const testing::SampleFixture f = testing::make_samples(3, kT);
  return f;
}

Batch<double> batch_of(const testing::SampleFixture& f) {
  return make_batch<double>(testing::all_of(f.samples), f.bounds, 1.0);
}

}  // namespace

TEST_CASE("input layer takes text, image, contact feature and point") {
  CHECK(kIndexerInputDims == 1315);
  IndexerConfig paper;
  paper.horizon = kT;
  Indexer<double> ix(paper, fixture().bounds, 1);
  CHECK(ix.input_width() == 1315);
  CHECK(paper.hidden == std::vector<Eigen::Index>{1024, 512});
  CHECK(paper.ffn == 1024);
  CHECK(paper.dropout == doctest::Approx(0.1));
}

TEST_CASE("logits have one K-way block per step and layer; softmax rows sum to one") {
  const auto& f = fixture();
  Indexer<double> ix(small_config(), f.bounds, 2);
  const auto b = batch_of(f);
  Graph<double> g(false, 0, false);
  const Tensor<double> logits = ix.logits(g, b, false).value();
  CHECK(logits.rows() == b.size * kT);
  CHECK(logits.cols() == 3 * 8);
  const Tensor<double> p = index_probabilities(logits, 3, 8);
  CHECK(p.rows() == logits.rows() * 3);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    CHECK(p.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.row(r).minCoeff() > 0.0);
  }
}

TEST_CASE("evaluation logits are deterministic; training dropout changes them") {
  const auto& f = fixture();
  Indexer<double> ix(small_config(), f.bounds, 3);
  const auto b = batch_of(f);
  Graph<double> g1(false, 0, false), g2(false, 5, false);
  CHECK((ix.logits(g1, b, false).value() - ix.logits(g2, b, false).value()).norm() == 0.0);
  Graph<double> t1(true, 1, false), t2(true, 2, false);
  CHECK((ix.logits(t1, b, false).value() - ix.logits(t2, b, false).value()).norm() > 0.0);
}

TEST_CASE("cross-entropy of uniform logits is ln K") {
  const auto& f = fixture();
  Indexer<double> ix(small_config(8, 3), f.bounds, 4);
  Graph<double> g(false, 0, false);
  auto logits = g.constant(Tensor<double>::Constant(6, 24, 0.7));
  Eigen::MatrixXi targets(6, 3);
  std::mt19937_64 rng(1);
  for (Eigen::Index i = 0; i < targets.size(); ++i) targets.data()[i] = static_cast<int>(rng() % 8);
  CHECK(ix.loss(logits, targets).value()(0, 0) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
  Eigen::MatrixXi bad(6, 2);
  CHECK_THROWS_AS(ix.loss(logits, bad), InvalidArgument);
}

TEST_CASE("argmax retrieval of one-hot logits returns the planted codewords") {
  std::mt19937_64 rng(5);
  RvqConfig rc;
  rc.K = 6;
  rc.E = 4;
  rc.Q = 3;
  ResidualVQ<double> vq(rc, rng);
  const auto x = testing::random_tensor(10, 4, rng);
  const auto q = vq.quantize_eval(x);
  Tensor<double> logits = Tensor<double>::Constant(10, 18, -3.0);
  for (Eigen::Index r = 0; r < 10; ++r)
    for (int l = 0; l < 3; ++l) logits(r, l * 6 + q.indices(r, l)) = 4.0;
  Eigen::MatrixXi idx;
  std::mt19937_64 unused(0);
  const Tensor<double> latent = retrieve(logits, vq, RetrievalMode::Argmax, unused, &idx);
  CHECK(idx == q.indices);
  CHECK((latent - q.quantized).norm() < 1e-12);

  // A near-delta distribution is sampled at its peak.
  Tensor<double> sharp = logits * 20.0;
  std::mt19937_64 srng(9);
  CHECK(select_indices(sharp, 3, 6, RetrievalMode::Sample, srng) == q.indices);
}

TEST_CASE("sampled retrieval follows the softmax and reproduces per seed") {
  Tensor<double> logits(1, 4);
  logits << 0.0, std::log(2.0), std::log(3.0), std::log(4.0);
  std::mt19937_64 rng(11);
  std::vector<int> counts(4, 0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(select_indices(logits, 1, 4, RetrievalMode::Sample, rng)(0, 0))];
  for (int k = 0; k < 4; ++k) CHECK(counts[static_cast<std::size_t>(k)] / double(n) == doctest::Approx((k + 1) / 10.0).epsilon(0.05));

  Tensor<double> wide(5, 12);
  std::mt19937_64 w(3);
  wide = testing::random_tensor(5, 12, w);
  std::mt19937_64 a(42), b(42), c(43);
  const auto ia = select_indices(wide, 3, 4, RetrievalMode::Sample, a);
  CHECK(ia == select_indices(wide, 3, 4, RetrievalMode::Sample, b));
  // Argmax ignores the generator state.
  CHECK(select_indices(wide, 3, 4, RetrievalMode::Argmax, c) == select_indices(wide, 3, 4, RetrievalMode::Argmax, a));
}

TEST_CASE("retrieval mode names") {
  CHECK(parse_retrieval_mode("argmax") == RetrievalMode::Argmax);
  CHECK(parse_retrieval_mode("sample") == RetrievalMode::Sample);
  CHECK_THROWS_AS(parse_retrieval_mode("topk"), InvalidArgument);
}

TEST_CASE("indexer gradients match finite differences") {
  const auto& f = fixture();
  auto cfg = small_config(4, 2);
  cfg.hidden = {6};
  cfg.ffn = 5;
  Indexer<double> ix(cfg, f.bounds, 6);
  const auto b = make_batch<double>({&f.samples[0], &f.samples[1]}, f.bounds, 1.0);
  Eigen::MatrixXi targets(2 * kT, 2);
  std::mt19937_64 rng(2);
  for (Eigen::Index i = 0; i < targets.size(); ++i) targets.data()[i] = static_cast<int>(rng() % 4);
  auto params = ix.parameters();
  std::mt19937_64 wr(4);
  testing::randomize(params, wr, 0.3);
  CHECK(testing::gradcheck_params(
            params, [&](Graph<double>& g) { return ix.loss(ix.logits(g, b), targets); }, 1e-5, false, 7, 6) < 1e-4);
}

TEST_CASE("training targets are the frozen codebook tokens and the loss drops") {
  const auto& f = fixture();
  InterCodeModel untrained(small_codebook(), f.bounds, 1);
  IndexerModel ix(small_config(), f.bounds, 2);
  TrainOptions opts;
  opts.epochs = 2;
  opts.batch = 2;
  CHECK_THROWS_AS(train_indexer(ix, untrained, f.samples, opts), InvalidArgument);

  InterCodeModel cb(small_codebook(), f.bounds, 1);
  std::mt19937_64 rng(0);
  initialize_codebook(cb, f.samples, rng);
  const auto t1 = tokenize(cb, f.samples);
  const auto t2 = tokenize(cb, f.samples);
  REQUIRE(t1.size() == f.samples.size());
  for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1[i] == t2[i]);

  IndexerModel mismatch(small_config(4, 3), f.bounds, 2);
  CHECK_THROWS_AS(train_indexer(mismatch, cb, f.samples, opts), InvalidArgument);

  opts.epochs = 200;
  opts.lr = 3e-3;
  const auto hist = train_indexer(ix, cb, f.samples, opts);
  REQUIRE(hist.size() == 200u);
  CHECK(hist.back().loss < 0.5 * hist.front().loss);
  // Training codewords are untouched.
  CHECK(tokenize(cb, f.samples)[0] == t1[0]);
  const auto acc = index_accuracy(ix, f.samples, t1);
  CHECK(acc.top1 > 0.9);
  CHECK(acc.top5 >= acc.top1);

  // After fitting, argmax retrieval equals the codebook latents of the targets.
  std::vector<Eigen::MatrixXi> picked;
  const auto lat = retrieve_latents(ix, cb.codebook(), f.samples, RetrievalMode::Argmax, 0, &picked);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    CHECK(lat[i].rows() == kT);
    CHECK((lat[i] - cb.codebook().lookup(picked[i])).norm() == 0.0f);
  }
}

#pragma once

// Learned indexer: frame-0 text, image and contact point -> independent
// distributions over the K entries of each (step, quantizer layer) slot.

#include <random>
#include <vector>

#include "intertraj/codebook/rvq.hpp"
#include "intertraj/conditioning/contact_encoder.hpp"
#include "intertraj/model/batch.hpp"

namespace intertraj {

inline constexpr Eigen::Index kIndexerInputDims = kTextDims + kImageDims + kContactFeatureDims + 3;  // 1315

struct IndexerConfig {
  int horizon = 30;
  int K = 512;
  int Q = 6;
  std::vector<Eigen::Index> hidden{1024, 512};
  Eigen::Index ffn = 1024;
  double dropout = 0.1;
  ContactEncoderDims contact;
  double sigma_voxels = 1.0;

  Eigen::Index width() const { return hidden.back(); }

  void validate() const {
    require(horizon >= 1 && K >= 1 && Q >= 1, "indexer: horizon, K and Q must be positive");
    require(!hidden.empty(), "indexer: at least one hidden width");
    for (auto h : hidden) require(h >= 1, "indexer: hidden widths must be positive");
    require(ffn >= 1, "indexer: ffn width must be positive");
  }
};

enum class RetrievalMode { Argmax, Sample };

RetrievalMode parse_retrieval_mode(const std::string& s);

template <typename S>
class Indexer {
 public:
  using Tensor = ad::Tensor<S>;

  Indexer() = default;
  Indexer(const IndexerConfig& cfg, const GridBounds& bounds, std::uint64_t seed)
      : cfg_(cfg), bounds_(bounds), scaling_(TranslationScaling::from_bounds(bounds)) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    contact_ = ContactEncoder<S>(rng, cfg_.contact);
    std::vector<Eigen::Index> widths{kIndexerInputDims};
    widths.insert(widths.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    input_ = ad::Mlp<S>(widths, rng);
    const Eigen::Index w = cfg_.width();
    queries_ = ad::Parameter<S>(ad::normal_init<S>(cfg_.horizon, w, 0.02, rng));
    layer_ = ad::TransformerDecoderLayer<S>(ad::TransformerDims{w, cfg_.ffn, cfg_.dropout}, rng);
    head_ = ad::Mlp<S>({w, w, w, Eigen::Index(cfg_.Q) * cfg_.K}, rng);
    coords_ = coordinate_grid(bounds_).template cast<S>();
  }

  const IndexerConfig& config() const { return cfg_; }
  const GridBounds& bounds() const { return bounds_; }
  Eigen::Index input_width() const { return input_.in_features(); }

  // Frame-0 contact point mapped to the grid box, [-1, 1] per axis.
  Tensor normalized_point(const Batch<S>& b) const {
    Tensor p = b.point0;
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      for (int a = 0; a < 3; ++a) p(r, a) = static_cast<S>((p(r, a) - scaling_.center(a)) / scaling_.half(a));
    return p;
  }

  // B*T x (Q*K) logits; column q*K + k scores entry k of layer q.
  ad::Var<S> logits(ad::Graph<S>& g, const Batch<S>& b, bool trainable = true) {
    auto contact = encode_contact_batch(g, contact_, b.heat0, coords_, trainable);
    auto features = ad::concat_cols(std::vector<ad::Var<S>>{
        g.constant_ref(b.text_seq), g.constant_ref(b.image0_seq), contact, g.constant(normalized_point(b))});
    // One memory token per sequence.
    auto memory = ad::relu(input_(g, features, trainable));
    auto queries = ad::tile_rows(g.param(queries_, trainable), b.size);
    auto h = layer_(g, queries, memory, b.size, trainable);
    return head_(g, h, trainable);
  }

  // Mean cross-entropy over all (sequence, step, layer) slots; targets B*T x Q.
  ad::Var<S> loss(const ad::Var<S>& logits, const Eigen::MatrixXi& targets) const {
    require(targets.rows() == logits.rows() && targets.cols() == cfg_.Q, "indexer loss: target shape");
    std::vector<int> flat;
    flat.reserve(static_cast<std::size_t>(targets.size()));
    for (Eigen::Index r = 0; r < targets.rows(); ++r)
      for (int q = 0; q < cfg_.Q; ++q) flat.push_back(targets(r, q));
    return ad::cross_entropy_mean(ad::reshape(logits, logits.rows() * cfg_.Q, cfg_.K), flat);
  }

  ad::ParameterList<S> parameters() {
    ad::ParameterList<S> out;
    contact_.collect("contact", out);
    input_.collect("input", out);
    out.push_back({"queries", &queries_});
    layer_.collect("layer", out);
    head_.collect("head", out);
    return out;
  }

 private:
  IndexerConfig cfg_;
  GridBounds bounds_;
  TranslationScaling scaling_;
  ContactEncoder<S> contact_;
  ad::Mlp<S> input_;
  ad::Parameter<S> queries_;
  ad::TransformerDecoderLayer<S> layer_;
  ad::Mlp<S> head_;
  Tensor coords_;
};

// Per-slot softmax of one row block of logits (rows x Q*K) -> (rows*Q x K).
template <typename S>
ad::Tensor<S> index_probabilities(const ad::Tensor<S>& logits, int Q, int K) {
  require(logits.cols() == Eigen::Index(Q) * K, "index_probabilities: width must be Q*K");
  ad::Tensor<S> p = Eigen::Map<const ad::Tensor<S>>(logits.data(), logits.rows() * Q, K);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const S m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

// Picks one entry per (row, layer): argmax, or a categorical draw from the
// softmax. Returns rows x Q indices.
template <typename S>
Eigen::MatrixXi select_indices(const ad::Tensor<S>& logits, int Q, int K, RetrievalMode mode, std::mt19937_64& rng) {
  const ad::Tensor<S> p = index_probabilities(logits, Q, K);
  Eigen::MatrixXi idx(logits.rows(), Q);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
    for (int q = 0; q < Q; ++q) {
      const auto row = p.row(r * Q + q);
      int pick = 0;
      if (mode == RetrievalMode::Argmax) {
        row.maxCoeff(&pick);
      } else {
        double x = u(rng), acc = 0.0;
        pick = K - 1;
        for (int k = 0; k < K; ++k) {
          acc += static_cast<double>(row(k));
          if (x < acc) {
            pick = k;
            break;
          }
        }
      }
      idx(r, q) = pick;
    }
  return idx;
}

// Latent rows: the sum over layers of the selected codewords.
template <typename S>
ad::Tensor<S> retrieve(const ad::Tensor<S>& logits, const ResidualVQ<S>& codebook, RetrievalMode mode,
                       std::mt19937_64& rng, Eigen::MatrixXi* indices = nullptr) {
  const auto& c = codebook.config();
  Eigen::MatrixXi idx = select_indices(logits, c.Q, c.K, mode, rng);
  ad::Tensor<S> latent = codebook.lookup(idx);
  if (indices) *indices = std::move(idx);
  return latent;
}

}  // namespace intertraj

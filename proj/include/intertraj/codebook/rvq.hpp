#pragma once

// Residual vector quantizer with EMA codeword updates.
//
// Layer q quantizes the residual left by layers 0..q-1; the reconstruction is
// the sum of the selected codewords. Codewords are not trained by gradient:
// each layer keeps EMA statistics (counts, sums) of the residuals assigned to
// every entry and sets codeword = sum / max(count, eps).

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "intertraj/ad/graph.hpp"
#include "intertraj/core/error.hpp"

namespace intertraj {

struct RvqConfig {
  int K = 512;
  int E = 512;
  int Q = 6;
  double gumbel_temp = 0.5;
  double ema_decay = 0.99;
  double dead_threshold = 1.0;
  double eps = 1e-5;

  void validate() const {
    require(K >= 1 && E >= 1 && Q >= 1, "codebook: K, E, Q must be at least 1");
    require(gumbel_temp > 0.0, "codebook: temperature must be positive");
    require(ema_decay > 0.0 && ema_decay < 1.0, "codebook: EMA decay must lie in (0, 1)");
  }
};

template <typename S>
struct Quantization {
  ad::Tensor<S> quantized;                 // N x E, sum of selected codewords
  Eigen::MatrixXi indices;                 // N x Q
  std::vector<ad::Tensor<S>> residuals;    // per layer, the residual that layer quantized
  std::vector<ad::Tensor<S>> partial;      // per layer, sum of codewords of layers 0..q
  std::vector<ad::Tensor<S>> soft;         // per layer N x K soft assignment (training only)
};

template <typename S>
class ResidualVQ {
 public:
  using Tensor = ad::Tensor<S>;

  ResidualVQ() = default;
  ResidualVQ(const RvqConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    cfg_.validate();
    std::normal_distribution<double> n(0.0, 1.0);
    for (int q = 0; q < cfg_.Q; ++q) {
      Tensor c(cfg_.K, cfg_.E);
      for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = static_cast<S>(n(rng));
      codewords_.push_back(c);
      counts_.push_back(Eigen::VectorXd::Ones(cfg_.K));
      sums_.push_back(c.template cast<double>());
    }
  }

  const RvqConfig& config() const { return cfg_; }
  int layers() const { return cfg_.Q; }
  bool initialized() const { return initialized_; }
  void mark_initialized() { initialized_ = true; }

  const Tensor& codewords(int q) const { return codewords_.at(q); }
  const Eigen::VectorXd& counts(int q) const { return counts_.at(q); }
  const Eigen::MatrixXd& sums(int q) const { return sums_.at(q); }

  // Replaces a layer's codewords; EMA statistics restart at count 1.
  void set_codewords(int q, const Tensor& c) {
    require(c.rows() == cfg_.K && c.cols() == cfg_.E, "codebook: codeword shape mismatch");
    codewords_.at(q) = c;
    counts_.at(q).setOnes();
    sums_.at(q) = c.template cast<double>();
  }

  void set_stats(int q, const Eigen::VectorXd& counts, const Eigen::MatrixXd& sums) {
    require(counts.size() == cfg_.K && sums.rows() == cfg_.K && sums.cols() == cfg_.E, "codebook: stats shape");
    counts_.at(q) = counts;
    sums_.at(q) = sums;
    refresh(q);
  }

  // Restores a layer exactly as saved.
  void restore(int q, const Tensor& codewords, const Eigen::VectorXd& counts, const Eigen::MatrixXd& sums) {
    require(codewords.rows() == cfg_.K && codewords.cols() == cfg_.E, "codebook: codeword shape mismatch");
    require(counts.size() == cfg_.K && sums.rows() == cfg_.K && sums.cols() == cfg_.E, "codebook: stats shape");
    codewords_.at(q) = codewords;
    counts_.at(q) = counts;
    sums_.at(q) = sums;
    initialized_ = true;
  }

  // Nearest-codeword residual quantization.
  Quantization<S> quantize_eval(const Tensor& features) const {
    check_features(features);
    Quantization<S> out = start(features);
    Tensor residual = features;
    for (int q = 0; q < cfg_.Q; ++q) {
      const Tensor logits = neg_sq_distance(residual, q);
      for (Eigen::Index r = 0; r < residual.rows(); ++r) {
        Eigen::Index best;
        logits.row(r).maxCoeff(&best);
        out.indices(r, q) = static_cast<int>(best);
      }
      advance(out, residual, q);
    }
    return out;
  }

  // Gumbel-max sampling from softmax(logits / temp) per layer, with
  // logits = -||residual - c_k||^2. Without noise this is argmin distance.
  Quantization<S> quantize_train(const Tensor& features, double temp, std::mt19937_64& rng, bool noise) const {
    check_features(features);
    require(temp > 0.0, "quantize_train: temperature must be positive");
    Quantization<S> out = start(features);
    Tensor residual = features;
    std::extreme_value_distribution<double> gumbel(0.0, 1.0);
    for (int q = 0; q < cfg_.Q; ++q) {
      Tensor z = neg_sq_distance(residual, q) / static_cast<S>(temp);
      if (noise)
        for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] += static_cast<S>(gumbel(rng));
      Tensor soft(z.rows(), z.cols());
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        Eigen::Index best;
        const S m = z.row(r).maxCoeff(&best);
        out.indices(r, q) = static_cast<int>(best);
        soft.row(r) = (z.row(r).array() - m).exp().matrix();
        soft.row(r) /= soft.row(r).sum();
      }
      out.soft.push_back(std::move(soft));
      advance(out, residual, q);
    }
    return out;
  }

  // counts <- d*counts + (1-d)*n_k ; sums <- d*sums + (1-d)*sum of assigned
  // residuals ; codewords <- sums / max(counts, eps). Entries whose count falls
  // below the dead threshold are re-seeded from random residuals of the batch.
  void ema_update(const std::vector<Tensor>& residuals, const Eigen::MatrixXi& indices, std::mt19937_64& rng) {
    require(static_cast<int>(residuals.size()) == cfg_.Q && indices.cols() == cfg_.Q, "ema_update: layer count");
    const double d = cfg_.ema_decay;
    for (int q = 0; q < cfg_.Q; ++q) {
      const Tensor& r = residuals[static_cast<std::size_t>(q)];
      require(r.rows() == indices.rows() && r.cols() == cfg_.E, "ema_update: residual shape");
      Eigen::VectorXd n = Eigen::VectorXd::Zero(cfg_.K);
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(cfg_.K, cfg_.E);
      for (Eigen::Index i = 0; i < r.rows(); ++i) {
        const int k = indices(i, q);
        n(k) += 1.0;
        s.row(k) += r.row(i).template cast<double>();
      }
      counts_[q] = d * counts_[q] + (1.0 - d) * n;
      sums_[q] = d * sums_[q] + (1.0 - d) * s;
      if (r.rows() > 0) {
        std::uniform_int_distribution<Eigen::Index> pick(0, r.rows() - 1);
        for (int k = 0; k < cfg_.K; ++k) {
          if (counts_[q](k) >= cfg_.dead_threshold) continue;
          counts_[q](k) = 1.0;
          sums_[q].row(k) = r.row(pick(rng)).template cast<double>();
        }
      }
      refresh(q);
    }
  }

  // k-means++ seeding of every layer from a batch of features, layer by layer
  // on the residual cascade.
  void initialize(const Tensor& features, std::mt19937_64& rng) {
    check_features(features);
    require(features.rows() > 0, "codebook initialization needs at least one feature");
    Tensor residual = features;
    for (int q = 0; q < cfg_.Q; ++q) {
      set_codewords(q, kmeanspp(residual, rng));
      const Tensor logits = neg_sq_distance(residual, q);
      for (Eigen::Index r = 0; r < residual.rows(); ++r) {
        Eigen::Index best;
        logits.row(r).maxCoeff(&best);
        residual.row(r) -= codewords_[q].row(best);
      }
    }
    initialized_ = true;
  }

  // Sum over layers of the codewords picked by `indices` (N x Q).
  Tensor lookup(const Eigen::MatrixXi& indices) const {
    require(indices.cols() == cfg_.Q, "codebook lookup: index width");
    Tensor out = Tensor::Zero(indices.rows(), cfg_.E);
    for (Eigen::Index r = 0; r < indices.rows(); ++r)
      for (int q = 0; q < cfg_.Q; ++q) {
        const int k = indices(r, q);
        require(k >= 0 && k < cfg_.K, "codebook lookup: index out of range");
        out.row(r) += codewords_[q].row(k);
      }
    return out;
  }

  // -||x - c_k||^2 for every row of x and codeword of layer q.
  Tensor neg_sq_distance(const Tensor& x, int q) const {
    const Tensor& c = codewords_[q];
    Tensor out = (x * c.transpose()) * S(2);
    out.colwise() -= x.rowwise().squaredNorm();
    out.rowwise() -= c.rowwise().squaredNorm().transpose();
    return out;
  }

 private:
  void check_features(const Tensor& f) const {
    require(f.cols() == cfg_.E, "codebook: feature width must equal E");
    require(f.allFinite(), "codebook: non-finite features");
  }

  Quantization<S> start(const Tensor& features) const {
    Quantization<S> out;
    out.quantized = Tensor::Zero(features.rows(), cfg_.E);
    out.indices.resize(features.rows(), cfg_.Q);
    return out;
  }

  void advance(Quantization<S>& out, Tensor& residual, int q) const {
    out.residuals.push_back(residual);
    for (Eigen::Index r = 0; r < residual.rows(); ++r) {
      const auto code = codewords_[q].row(out.indices(r, q));
      residual.row(r) -= code;
      out.quantized.row(r) += code;
    }
    out.partial.push_back(out.quantized);
  }

  void refresh(int q) {
    const Eigen::VectorXd denom = counts_[q].cwiseMax(cfg_.eps);
    codewords_[q] = (sums_[q].array().colwise() / denom.array()).matrix().template cast<S>();
  }

  Tensor kmeanspp(const Tensor& x, std::mt19937_64& rng) const {
    const Eigen::Index n = x.rows();
    Tensor centers(cfg_.K, cfg_.E);
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.row(0) = x.row(first(rng));
    Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm().template cast<double>();
    std::normal_distribution<double> jitter(0.0, 1e-3);
    for (int k = 1; k < cfg_.K; ++k) {
      const double total = d2.sum();
      Eigen::Index pick = first(rng);
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double t = u(rng), acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          acc += d2(i);
          if (acc >= t) {
            pick = i;
            break;
          }
        }
        centers.row(k) = x.row(pick);
      } else {
        // Fewer distinct points than entries: duplicate with a small jitter.
        centers.row(k) = x.row(pick);
        for (int e = 0; e < cfg_.E; ++e) centers(k, e) += static_cast<S>(jitter(rng));
      }
      d2 = d2.cwiseMin((x.rowwise() - centers.row(k)).rowwise().squaredNorm().template cast<double>());
    }
    return centers;
  }

  RvqConfig cfg_;
  std::vector<Tensor> codewords_;
  std::vector<Eigen::VectorXd> counts_;
  std::vector<Eigen::MatrixXd> sums_;
  bool initialized_ = false;
};

}  // namespace intertraj

#pragma once

// Differentiable free functions over Var. Each op computes its value eagerly
// and registers a backward closure with the owning graph.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "intertraj/ad/graph.hpp"

namespace intertraj::ad {

namespace detail {

inline void check(bool ok, const char* op, const std::string& what) {
  if (!ok) throw InvalidArgument(std::string(op) + ": " + what);
}

template <typename S>
void same_shape(const Var<S>& a, const Var<S>& b, const char* op) {
  check(a.rows() == b.rows() && a.cols() == b.cols(), op,
        "shape mismatch " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
            std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

template <typename S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
  detail::check(a.cols() == b.rows(), "matmul", "inner dimension mismatch");
  Tensor<S> out;
  out.noalias() = a.value() * b.value();
  return a.graph().emit(std::move(out), {a, b}, [a, b](const Tensor<S>& g) {
    if (a.requires_grad()) a.node()->grad_buffer().noalias() += g * b.value().transpose();
    if (b.requires_grad()) b.node()->grad_buffer().noalias() += a.value().transpose() * g;
  });
}

// x (n x in) * W (in x out) + bias (1 x out)
template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& weight, const Var<S>& bias) {
  detail::check(x.cols() == weight.rows(), "linear", "input width " + std::to_string(x.cols()) +
                                                         " vs weight rows " + std::to_string(weight.rows()));
  detail::check(bias.rows() == 1 && bias.cols() == weight.cols(), "linear", "bias shape");
  Tensor<S> out;
  out.noalias() = x.value() * weight.value();
  out.rowwise() += bias.value().row(0);
  return x.graph().emit(std::move(out), {x, weight, bias}, [x, weight, bias](const Tensor<S>& g) {
    if (x.requires_grad()) x.node()->grad_buffer().noalias() += g * weight.value().transpose();
    if (weight.requires_grad()) weight.node()->grad_buffer().noalias() += x.value().transpose() * g;
    if (bias.requires_grad()) bias.node()->grad_buffer() += g.colwise().sum();
  });
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  detail::same_shape(a, b, "add");
  return a.graph().emit(a.value() + b.value(), {a, b}, [a, b](const Tensor<S>& g) {
    a.accumulate(g);
    b.accumulate(g);
  });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  detail::same_shape(a, b, "sub");
  return a.graph().emit(a.value() - b.value(), {a, b}, [a, b](const Tensor<S>& g) {
    a.accumulate(g);
    b.accumulate(-g);
  });
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  detail::same_shape(a, b, "mul");
  Tensor<S> out = a.value().cwiseProduct(b.value());
  return a.graph().emit(std::move(out), {a, b}, [a, b](const Tensor<S>& g) {
    a.accumulate(g.cwiseProduct(b.value()));
    b.accumulate(g.cwiseProduct(a.value()));
  });
}

// a (n x m) + row (1 x m) broadcast over rows
template <typename S>
Var<S> add_row(const Var<S>& a, const Var<S>& row) {
  detail::check(row.rows() == 1 && row.cols() == a.cols(), "add_row", "row shape");
  Tensor<S> out = a.value();
  out.rowwise() += row.value().row(0);
  return a.graph().emit(std::move(out), {a, row}, [a, row](const Tensor<S>& g) {
    a.accumulate(g);
    if (row.requires_grad()) row.node()->grad_buffer() += g.colwise().sum();
  });
}

// a (n*k x m) + tile (k x m), the tile repeated for each of the n blocks.
template <typename S>
Var<S> add_tiled(const Var<S>& a, const Var<S>& tile) {
  const Eigen::Index k = tile.rows();
  detail::check(tile.cols() == a.cols() && k > 0 && a.rows() % k == 0, "add_tiled", "tile shape");
  const Eigen::Index n = a.rows() / k;
  Tensor<S> out = a.value();
  for (Eigen::Index i = 0; i < n; ++i) out.middleRows(i * k, k) += tile.value();
  return a.graph().emit(std::move(out), {a, tile}, [a, tile, n, k](const Tensor<S>& g) {
    a.accumulate(g);
    if (tile.requires_grad()) {
      auto& tg = tile.node()->grad_buffer();
      for (Eigen::Index i = 0; i < n; ++i) tg += g.middleRows(i * k, k);
    }
  });
}

template <typename S>
Var<S> scale(const Var<S>& a, S s) {
  return a.graph().emit(a.value() * s, {a}, [a, s](const Tensor<S>& g) { a.accumulate(g * s); });
}

// Column j multiplied by the constant factors(0, j).
template <typename S>
Var<S> scale_cols(const Var<S>& a, const Tensor<S>& factors) {
  detail::check(factors.rows() == 1 && factors.cols() == a.cols(), "scale_cols", "factor shape");
  Tensor<S> out = a.value();
  out.array().rowwise() *= factors.row(0).array();
  return a.graph().emit(std::move(out), {a}, [a, factors](const Tensor<S>& g) {
    Tensor<S> d = g;
    d.array().rowwise() *= factors.row(0).array();
    a.accumulate(d);
  });
}

template <typename S>
Var<S> add_scalar(const Var<S>& a, S s) {
  Tensor<S> out = a.value().array() + s;
  return a.graph().emit(std::move(out), {a}, [a](const Tensor<S>& g) { a.accumulate(g); });
}

template <typename S>
Var<S> relu(const Var<S>& a) {
  Tensor<S> out = a.value().cwiseMax(S(0));
  return a.graph().emit(std::move(out), {a}, [a](const Tensor<S>& g) {
    a.accumulate((a.value().array() > S(0)).select(g, S(0)));
  });
}

template <typename S>
Tensor<S> sigmoid_value(const Tensor<S>& x) {
  return (S(1) / (S(1) + (-x.array()).exp())).matrix();
}

template <typename S>
Var<S> sigmoid(const Var<S>& a) {
  Tensor<S> out = sigmoid_value(a.value());
  Var<S> result = a.graph().emit(std::move(out), {a}, nullptr);
  if (result.requires_grad()) {
    Node<S>* self = result.node();
    self->backward = [a, self](const Tensor<S>& g) {
      const auto& y = self->value;
      a.accumulate((g.array() * y.array() * (S(1) - y.array())).matrix());
    };
  }
  return result;
}

template <typename S>
Var<S> tanh(const Var<S>& a) {
  Tensor<S> out = a.value().array().tanh().matrix();
  Var<S> result = a.graph().emit(std::move(out), {a}, nullptr);
  if (result.requires_grad()) {
    Node<S>* self = result.node();
    self->backward = [a, self](const Tensor<S>& g) {
      const auto& y = self->value;
      a.accumulate((g.array() * (S(1) - y.array().square())).matrix());
    };
  }
  return result;
}

// Same value, no gradient.
template <typename S>
Var<S> detach(const Var<S>& a) {
  return a.graph().constant(a.value());
}

// Forward value `quantized`, backward identity into `x`.
template <typename S>
Var<S> straight_through(const Var<S>& x, const Tensor<S>& quantized) {
  detail::check(x.rows() == quantized.rows() && x.cols() == quantized.cols(), "straight_through", "shape");
  return x.graph().emit(quantized, {x}, [x](const Tensor<S>& g) { x.accumulate(g); });
}

// Inverted dropout; identity outside training.
template <typename S>
Var<S> dropout(const Var<S>& a, double p) {
  auto& graph = a.graph();
  if (!graph.training() || p <= 0.0) return a;
  std::bernoulli_distribution keep(1.0 - p);
  const S inv = S(1.0 / (1.0 - p));
  Tensor<S> mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(graph.rng()) ? inv : S(0);
  Tensor<S> out = a.value().cwiseProduct(mask);
  return graph.emit(std::move(out), {a}, [a, mask = std::move(mask)](const Tensor<S>& g) {
    a.accumulate(g.cwiseProduct(mask));
  });
}

// ---------------------------------------------------------------------------
// Structural

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  detail::check(!parts.empty(), "concat_cols", "no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    detail::check(p.rows() == rows, "concat_cols", "row mismatch");
    cols += p.cols();
  }
  Tensor<S> out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return parts.front().graph().emit(std::move(out), parts, [parts](const Tensor<S>& g) {
    Eigen::Index c0 = 0;
    for (const auto& p : parts) {
      p.accumulate(g.middleCols(c0, p.cols()));
      c0 += p.cols();
    }
  });
}

template <typename S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
  detail::check(!parts.empty(), "concat_rows", "no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    detail::check(p.cols() == cols, "concat_rows", "column mismatch");
    rows += p.rows();
  }
  Tensor<S> out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return parts.front().graph().emit(std::move(out), parts, [parts](const Tensor<S>& g) {
    Eigen::Index r0 = 0;
    for (const auto& p : parts) {
      p.accumulate(g.middleRows(r0, p.rows()));
      r0 += p.rows();
    }
  });
}

template <typename S>
Var<S> slice_cols(const Var<S>& a, Eigen::Index start, Eigen::Index count) {
  detail::check(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols", "range");
  return a.graph().emit(a.value().middleCols(start, count), {a}, [a, start, count](const Tensor<S>& g) {
    if (a.requires_grad()) a.node()->grad_buffer().middleCols(start, count) += g;
  });
}

template <typename S>
Var<S> slice_rows(const Var<S>& a, Eigen::Index start, Eigen::Index count) {
  detail::check(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows", "range");
  return a.graph().emit(a.value().middleRows(start, count), {a}, [a, start, count](const Tensor<S>& g) {
    if (a.requires_grad()) a.node()->grad_buffer().middleRows(start, count) += g;
  });
}

// out.row(i) = a.row(index[i]); duplicates allowed (gradients sum).
template <typename S>
Var<S> gather_rows(const Var<S>& a, std::vector<Eigen::Index> index) {
  Tensor<S> out(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    detail::check(index[i] >= 0 && index[i] < a.rows(), "gather_rows", "index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(index[i]);
  }
  return a.graph().emit(std::move(out), {a}, [a, index = std::move(index)](const Tensor<S>& g) {
    if (!a.requires_grad()) return;
    auto& ga = a.node()->grad_buffer();
    for (std::size_t i = 0; i < index.size(); ++i) ga.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

// Each row repeated `times` times consecutively: (n x m) -> (n*times x m).
template <typename S>
Var<S> repeat_rows(const Var<S>& a, Eigen::Index times) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(a.rows() * times));
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index t = 0; t < times; ++t) idx.push_back(r);
  return gather_rows(a, std::move(idx));
}

// Whole matrix tiled `times` times vertically: (k x m) -> (times*k x m).
template <typename S>
Var<S> tile_rows(const Var<S>& a, Eigen::Index times) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(a.rows() * times));
  for (Eigen::Index t = 0; t < times; ++t)
    for (Eigen::Index r = 0; r < a.rows(); ++r) idx.push_back(r);
  return gather_rows(a, std::move(idx));
}

// Row-major reinterpretation.
template <typename S>
Var<S> reshape(const Var<S>& a, Eigen::Index rows, Eigen::Index cols) {
  detail::check(rows * cols == a.value().size(), "reshape", "element count");
  Tensor<S> out = Eigen::Map<const Tensor<S>>(a.value().data(), rows, cols);
  const Eigen::Index r0 = a.rows(), c0 = a.cols();
  return a.graph().emit(std::move(out), {a}, [a, r0, c0](const Tensor<S>& g) {
    a.accumulate(Eigen::Map<const Tensor<S>>(g.data(), r0, c0));
  });
}

// ---------------------------------------------------------------------------
// Reductions and losses (all return 1 x 1)

template <typename S>
Var<S> sum(const Var<S>& a) {
  Tensor<S> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph().emit(std::move(out), {a}, [a](const Tensor<S>& g) {
    a.accumulate(Tensor<S>::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

template <typename S>
Var<S> mean(const Var<S>& a) {
  return scale(sum(a), S(1) / static_cast<S>(std::max<Eigen::Index>(a.value().size(), 1)));
}

// Weighted sum of scalar terms.
template <typename S>
Var<S> weighted_sum(const std::vector<Var<S>>& terms, const std::vector<S>& weights) {
  detail::check(!terms.empty() && terms.size() == weights.size(), "weighted_sum", "arity");
  Tensor<S> out = Tensor<S>::Zero(1, 1);
  for (std::size_t i = 0; i < terms.size(); ++i) out(0, 0) += weights[i] * terms[i].value()(0, 0);
  return terms.front().graph().emit(std::move(out), terms, [terms, weights](const Tensor<S>& g) {
    for (std::size_t i = 0; i < terms.size(); ++i)
      terms[i].accumulate(Tensor<S>::Constant(1, 1, g(0, 0) * weights[i]));
  });
}

// Mean Huber / smooth-L1 with transition at `beta`.
template <typename S>
Var<S> smooth_l1_mean(const Var<S>& pred, const Var<S>& target, S beta = S(1)) {
  detail::same_shape(pred, target, "smooth_l1_mean");
  const Tensor<S> diff = pred.value() - target.value();
  const S n = static_cast<S>(std::max<Eigen::Index>(diff.size(), 1));
  Tensor<S> out(1, 1);
  out(0, 0) = diff.array().abs().unaryExpr([beta](S d) { return d < beta ? S(0.5) * d * d / beta : d - S(0.5) * beta; }).sum() / n;
  return pred.graph().emit(std::move(out), {pred, target}, [pred, target, diff, beta, n](const Tensor<S>& g) {
    Tensor<S> d = diff.unaryExpr([beta](S x) { return std::abs(x) < beta ? x / beta : (x > 0 ? S(1) : S(-1)); }) *
                  (g(0, 0) / n);
    pred.accumulate(d);
    target.accumulate(-d);
  });
}

template <typename S>
Var<S> l1_mean(const Var<S>& pred, const Var<S>& target) {
  detail::same_shape(pred, target, "l1_mean");
  const Tensor<S> diff = pred.value() - target.value();
  const S n = static_cast<S>(std::max<Eigen::Index>(diff.size(), 1));
  Tensor<S> out(1, 1);
  out(0, 0) = diff.array().abs().sum() / n;
  return pred.graph().emit(std::move(out), {pred, target}, [pred, target, diff, n](const Tensor<S>& g) {
    Tensor<S> d = diff.unaryExpr([](S x) { return x > 0 ? S(1) : (x < 0 ? S(-1) : S(0)); }) * (g(0, 0) / n);
    pred.accumulate(d);
    target.accumulate(-d);
  });
}

template <typename S>
Var<S> mse_mean(const Var<S>& pred, const Var<S>& target) {
  detail::same_shape(pred, target, "mse_mean");
  const Tensor<S> diff = pred.value() - target.value();
  const S n = static_cast<S>(std::max<Eigen::Index>(diff.size(), 1));
  Tensor<S> out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  return pred.graph().emit(std::move(out), {pred, target}, [pred, target, diff, n](const Tensor<S>& g) {
    Tensor<S> d = diff * (S(2) * g(0, 0) / n);
    pred.accumulate(d);
    target.accumulate(-d);
  });
}

// Numerically stable mean binary cross-entropy on logits.
template <typename S>
Var<S> bce_with_logits_mean(const Var<S>& logits, const Var<S>& targets) {
  detail::same_shape(logits, targets, "bce_with_logits_mean");
  const auto& x = logits.value().array();
  const auto& y = targets.value().array();
  const S n = static_cast<S>(std::max<Eigen::Index>(logits.value().size(), 1));
  Tensor<S> out(1, 1);
  out(0, 0) = (x.cwiseMax(S(0)) - x * y + (S(1) + (-x.abs()).exp()).log()).sum() / n;
  return logits.graph().emit(std::move(out), {logits, targets}, [logits, targets, n](const Tensor<S>& g) {
    const S k = g(0, 0) / n;
    if (logits.requires_grad())
      logits.node()->grad_buffer() += ((sigmoid_value(logits.value()) - targets.value()) * k);
    if (targets.requires_grad()) targets.node()->grad_buffer() += (-logits.value()) * k;
  });
}

// Mean softmax cross-entropy; logits rows x classes, one target per row.
template <typename S>
Var<S> cross_entropy_mean(const Var<S>& logits, const std::vector<int>& targets) {
  detail::check(static_cast<Eigen::Index>(targets.size()) == logits.rows(), "cross_entropy_mean", "target count");
  const Eigen::Index rows = logits.rows();
  Tensor<S> prob(rows, logits.cols());
  S total = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = logits.value().row(r);
    const S m = row.maxCoeff();
    prob.row(r) = (row.array() - m).exp().matrix();
    const S z = prob.row(r).sum();
    prob.row(r) /= z;
    const int t = targets[static_cast<std::size_t>(r)];
    detail::check(t >= 0 && t < logits.cols(), "cross_entropy_mean", "target out of range");
    total += -(row(t) - m - std::log(z));
  }
  Tensor<S> out(1, 1);
  out(0, 0) = total / static_cast<S>(std::max<Eigen::Index>(rows, 1));
  return logits.graph().emit(std::move(out), {logits}, [logits, prob, targets](const Tensor<S>& g) {
    Tensor<S> d = prob;
    for (Eigen::Index r = 0; r < d.rows(); ++r) d(r, targets[static_cast<std::size_t>(r)]) -= S(1);
    logits.accumulate(d * (g(0, 0) / static_cast<S>(std::max<Eigen::Index>(d.rows(), 1))));
  });
}

// ---------------------------------------------------------------------------
// Normalization and attention

template <typename S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gamma, const Var<S>& beta, S eps = S(1e-5)) {
  const Eigen::Index n = x.rows(), d = x.cols();
  detail::check(gamma.rows() == 1 && gamma.cols() == d && beta.rows() == 1 && beta.cols() == d, "layer_norm",
                "affine shape");
  Tensor<S> xhat(n, d);
  Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = x.value().row(r);
    const S mu = row.mean();
    const S var = (row.array() - mu).square().mean();
    inv_std(r) = S(1) / std::sqrt(var + eps);
    xhat.row(r) = (row.array() - mu) * inv_std(r);
  }
  Tensor<S> out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  return x.graph().emit(std::move(out), {x, gamma, beta}, [x, gamma, beta, xhat, inv_std](const Tensor<S>& g) {
    const Eigen::Index d = xhat.cols();
    if (gamma.requires_grad()) gamma.node()->grad_buffer() += g.cwiseProduct(xhat).colwise().sum();
    if (beta.requires_grad()) beta.node()->grad_buffer() += g.colwise().sum();
    if (x.requires_grad()) {
      Tensor<S> dxhat = g;
      dxhat.array().rowwise() *= gamma.value().row(0).array();
      auto& gx = x.node()->grad_buffer();
      for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
        const S s1 = dxhat.row(r).sum();
        const S s2 = dxhat.row(r).dot(xhat.row(r));
        gx.row(r).array() +=
            (inv_std(r) / static_cast<S>(d)) *
            (static_cast<S>(d) * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2);
      }
    }
  });
}

// Scaled dot-product attention applied independently to `batches` blocks:
// q is (batches*tq x d), k is (batches*tk x d), v is (batches*tk x dv).
template <typename S>
Var<S> attention(const Var<S>& q, const Var<S>& k, const Var<S>& v, Eigen::Index batches) {
  detail::check(batches > 0 && q.rows() % batches == 0 && k.rows() % batches == 0 && k.rows() == v.rows(),
                "attention", "batch layout");
  detail::check(q.cols() == k.cols(), "attention", "query/key width");
  const Eigen::Index tq = q.rows() / batches, tk = k.rows() / batches, dv = v.cols();
  const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(q.cols()));
  Tensor<S> probs(batches * tq, tk);
  Tensor<S> out(batches * tq, dv);
  for (Eigen::Index b = 0; b < batches; ++b) {
    Tensor<S> scores = (q.value().middleRows(b * tq, tq) * k.value().middleRows(b * tk, tk).transpose()) * inv_sqrt;
    for (Eigen::Index r = 0; r < tq; ++r) {
      const S m = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - m).exp().matrix();
      scores.row(r) /= scores.row(r).sum();
    }
    out.middleRows(b * tq, tq).noalias() = scores * v.value().middleRows(b * tk, tk);
    probs.middleRows(b * tq, tq) = scores;
  }
  return q.graph().emit(std::move(out), {q, k, v},
                        [q, k, v, probs, batches, tq, tk, inv_sqrt](const Tensor<S>& g) {
    for (Eigen::Index b = 0; b < batches; ++b) {
      const auto p = probs.middleRows(b * tq, tq);
      const auto gb = g.middleRows(b * tq, tq);
      if (v.requires_grad()) v.node()->grad_buffer().middleRows(b * tk, tk).noalias() += p.transpose() * gb;
      if (!q.requires_grad() && !k.requires_grad()) continue;
      Tensor<S> dp = gb * v.value().middleRows(b * tk, tk).transpose();
      Tensor<S> ds(tq, tk);
      for (Eigen::Index r = 0; r < tq; ++r) {
        const S dot = dp.row(r).dot(p.row(r));
        ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
      }
      ds *= inv_sqrt;
      if (q.requires_grad())
        q.node()->grad_buffer().middleRows(b * tq, tq).noalias() += ds * k.value().middleRows(b * tk, tk);
      if (k.requires_grad())
        k.node()->grad_buffer().middleRows(b * tk, tk).noalias() += ds.transpose() * q.value().middleRows(b * tq, tq);
    }
  });
}

}  // namespace intertraj::ad

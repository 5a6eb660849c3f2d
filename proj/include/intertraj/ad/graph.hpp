#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major Eigen
// matrices. A Graph records every operation executed on its Vars; calling
// backward() on a scalar output accumulates gradients into every node (and
// every Parameter) that contributed to it.
//
// Graphs are single-use: build one per step, call backward once, discard.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "intertraj/core/error.hpp"

namespace intertraj::ad {

template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// A trainable tensor that outlives graphs. Gradients accumulate across every
// graph that uses it until zero_grad().
template <typename Scalar>
struct Parameter {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;

  Parameter() = default;
  explicit Parameter(Tensor<Scalar> v)
      : value(std::move(v)), grad(Tensor<Scalar>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  const Tensor<Scalar>* external = nullptr;
  Parameter<Scalar>* param = nullptr;
  Tensor<Scalar> grad;
  bool requires_grad = false;
  std::function<void(const Tensor<Scalar>&)> backward;

  const Tensor<Scalar>& val() const {
    if (param) return param->value;
    if (external) return *external;
    return value;
  }

  bool has_grad() const { return param ? true : grad.size() != 0; }

  Tensor<Scalar>& grad_buffer() {
    if (param) {
      if (param->grad.rows() != param->value.rows() || param->grad.cols() != param->value.cols())
        param->zero_grad();
      return param->grad;
    }
    if (grad.size() == 0) grad.setZero(val().rows(), val().cols());
    return grad;
  }
};

template <typename Scalar>
class Graph;

// Lightweight handle to a node owned by a Graph.
template <typename Scalar>
class Var {
 public:
  using Tensor = ad::Tensor<Scalar>;

  Var() = default;
  Var(Graph<Scalar>* graph, Node<Scalar>* node) : graph_(graph), node_(node) {}

  const Tensor& value() const { return node_->val(); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool valid() const { return node_ != nullptr; }

  // Gradient after Graph::backward; zero-shaped if the node never received one.
  const Tensor& grad() const { return node_->param ? node_->param->grad : node_->grad; }

  Graph<Scalar>& graph() const { return *graph_; }
  Node<Scalar>* node() const { return node_; }

  // Accumulate `g` into this node's gradient buffer (no-op if not tracked).
  template <typename Expr>
  void accumulate(const Expr& g) const {
    if (node_->requires_grad) node_->grad_buffer() += g;
  }

 private:
  Graph<Scalar>* graph_ = nullptr;
  Node<Scalar>* node_ = nullptr;
};

template <typename Scalar>
class Graph {
 public:
  using Tensor = ad::Tensor<Scalar>;
  using VarT = Var<Scalar>;

  explicit Graph(bool training = false, std::uint64_t seed = 0, bool grad_enabled = true)
      : training_(training), grad_enabled_(grad_enabled), rng_(seed) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }
  bool grad_enabled() const { return grad_enabled_; }
  std::mt19937_64& rng() { return rng_; }

  VarT constant(Tensor value) {
    auto* n = new_node();
    n->value = std::move(value);
    return {this, n};
  }

  // Non-owning constant; `value` must outlive the graph.
  VarT constant_ref(const Tensor& value) {
    auto* n = new_node();
    n->external = &value;
    return {this, n};
  }

  // Leaf whose gradient is wanted (inputs under test, for instance).
  VarT variable(Tensor value) {
    auto* n = new_node();
    n->value = std::move(value);
    n->requires_grad = grad_enabled_;
    return {this, n};
  }

  // Node reading a Parameter. Frozen parameters behave as constants.
  VarT param(Parameter<Scalar>& p, bool trainable = true) {
    auto* n = new_node();
    if (trainable && grad_enabled_) {
      n->param = &p;
      n->requires_grad = true;
    } else {
      n->external = &p.value;
    }
    return {this, n};
  }

  // Records the result of an op. `backward(out_grad)` must push gradients into
  // the inputs through Var::accumulate; it only runs when some input is tracked.
  template <typename Backward>
  VarT emit(Tensor value, std::initializer_list<VarT> inputs, Backward&& backward) {
    return emit_impl(std::move(value), inputs.begin(), inputs.end(), std::forward<Backward>(backward));
  }

  template <typename Backward>
  VarT emit(Tensor value, const std::vector<VarT>& inputs, Backward&& backward) {
    return emit_impl(std::move(value), inputs.begin(), inputs.end(), std::forward<Backward>(backward));
  }

  void backward(const VarT& output) {
    if (output.rows() != 1 || output.cols() != 1)
      throw InvalidArgument("backward() expects a scalar output");
    if (!output.requires_grad()) return;
    output.node()->grad_buffer().setOnes();
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<Scalar>& n = **it;
      if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
      n.backward(n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  Node<Scalar>* new_node() {
    nodes_.push_back(std::make_unique<Node<Scalar>>());
    return nodes_.back().get();
  }

  template <typename It, typename Backward>
  VarT emit_impl(Tensor value, It first, It last, Backward&& backward) {
    auto* n = new_node();
    n->value = std::move(value);
    bool tracked = false;
    for (It it = first; it != last; ++it) tracked = tracked || it->requires_grad();
    if (tracked && grad_enabled_) {
      n->requires_grad = true;
      n->backward = std::forward<Backward>(backward);
    }
    return {this, n};
  }

  bool training_;
  bool grad_enabled_;
  std::mt19937_64 rng_;
  std::vector<std::unique_ptr<Node<Scalar>>> nodes_;
};

}  // namespace intertraj::ad

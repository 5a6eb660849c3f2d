#pragma once

#include <cmath>
#include <unordered_map>

#include "intertraj/ad/nn.hpp"

namespace intertraj::ad {

template <typename S>
void zero_grad(const ParameterList<S>& params) {
  for (const auto& p : params) p.param->zero_grad();
}

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename S>
double clip_grad_norm(const ParameterList<S>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) sq += static_cast<double>(p.param->grad.squaredNorm());
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const S k = static_cast<S>(max_norm / (norm + 1e-12));
    for (const auto& p : params) p.param->grad *= k;
  }
  return norm;
}

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

template <typename S>
class Adam {
 public:
  Adam(ParameterList<S> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
    for (const auto& p : params_) {
      auto& st = state_[p.param];
      st.m = Tensor<S>::Zero(p.param->value.rows(), p.param->value.cols());
      st.v = st.m;
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    const S b1 = static_cast<S>(opts_.beta1), b2 = static_cast<S>(opts_.beta2);
    const S step_size = static_cast<S>(opts_.lr / bc1);
    const S inv_bc2 = static_cast<S>(1.0 / bc2);
    const S eps = static_cast<S>(opts_.eps);
    for (const auto& p : params_) {
      auto& st = state_[p.param];
      auto& g = p.param->grad;
      if (opts_.weight_decay > 0.0) g += p.param->value * static_cast<S>(opts_.weight_decay);
      st.m = b1 * st.m + (S(1) - b1) * g;
      st.v = b2 * st.v + (S(1) - b2) * g.cwiseAbs2();
      p.param->value.array() -= step_size * st.m.array() / ((st.v.array() * inv_bc2).sqrt() + eps);
    }
  }

  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }
  long steps() const { return t_; }

 private:
  struct State {
    Tensor<S> m, v;
  };
  ParameterList<S> params_;
  AdamOptions opts_;
  std::unordered_map<Parameter<S>*, State> state_;
  long t_ = 0;
};

}  // namespace intertraj::ad

#pragma once

// Central finite-difference oracle for graph-built scalar functions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "intertraj/ad/nn.hpp"

namespace testing {

using intertraj::ad::Graph;
using intertraj::ad::Tensor;
using intertraj::ad::Var;

using GraphFn = std::function<Var<double>(Graph<double>&, const std::vector<Var<double>>&)>;

inline double relative_error(const Tensor<double>& analytic, const Tensor<double>& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / scale;
}

// Worst norm-wise relative error over all inputs.
inline double gradcheck_inputs(std::vector<Tensor<double>> inputs, const GraphFn& f, double step = 1e-5,
                               bool training = false, std::uint64_t seed = 7) {
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> g(training, seed);
    std::vector<Var<double>> vars;
    for (const auto& x : inputs) vars.push_back(g.variable(x));
    auto out = f(g, vars);
    g.backward(out);
    for (const auto& v : vars)
      analytic.push_back(v.grad().size() ? v.grad() : Tensor<double>::Zero(v.rows(), v.cols()));
  }
  auto eval = [&](const std::vector<Tensor<double>>& xs) {
    Graph<double> g(training, seed, false);
    std::vector<Var<double>> vars;
    for (const auto& x : xs) vars.push_back(g.constant(x));
    return f(g, vars).value()(0, 0);
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor<double> numeric(inputs[i].rows(), inputs[i].cols());
    for (Eigen::Index k = 0; k < inputs[i].size(); ++k) {
      const double orig = inputs[i].data()[k];
      inputs[i].data()[k] = orig + step;
      const double fp = eval(inputs);
      inputs[i].data()[k] = orig - step;
      const double fm = eval(inputs);
      inputs[i].data()[k] = orig;
      numeric.data()[k] = (fp - fm) / (2.0 * step);
    }
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  return worst;
}

// Same check against every parameter in `params`, measured jointly over the
// concatenated gradient (some parameters, like attention key biases, have an
// exactly zero gradient).
inline double gradcheck_params(const intertraj::ad::ParameterList<double>& params,
                               const std::function<Var<double>(Graph<double>&)>& f, double step = 1e-5,
                               bool training = false, std::uint64_t seed = 7, Eigen::Index max_entries = 0) {
  for (const auto& p : params) p.param->zero_grad();
  {
    Graph<double> g(training, seed);
    g.backward(f(g));
  }
  double diff_sq = 0.0, an_sq = 0.0, nu_sq = 0.0;
  for (const auto& p : params) {
    Tensor<double> analytic = p.param->grad;
    Tensor<double> numeric = analytic;
    std::vector<Eigen::Index> entries(static_cast<std::size_t>(analytic.size()));
    std::iota(entries.begin(), entries.end(), Eigen::Index{0});
    if (max_entries > 0 && analytic.size() > max_entries) {
      std::mt19937_64 pick(seed + entries.size());
      std::shuffle(entries.begin(), entries.end(), pick);
      entries.resize(static_cast<std::size_t>(max_entries));
    }
    for (Eigen::Index k : entries) {
      double& x = p.param->value.data()[k];
      const double orig = x;
      x = orig + step;
      double fp, fm;
      {
        Graph<double> g(training, seed, false);
        fp = f(g).value()(0, 0);
      }
      x = orig - step;
      {
        Graph<double> g(training, seed, false);
        fm = f(g).value()(0, 0);
      }
      x = orig;
      numeric.data()[k] = (fp - fm) / (2.0 * step);
    }
    diff_sq += (analytic - numeric).squaredNorm();
    an_sq += analytic.squaredNorm();
    nu_sq += numeric.squaredNorm();
  }
  return std::sqrt(diff_sq) / std::max({std::sqrt(an_sq), std::sqrt(nu_sq), 1e-12});
}

// Finite differences on a sample of `samples` entries of input 0 plus
// `directions` random directions through all of it; for inputs too large to
// perturb entry by entry. Returns the worst relative error seen.
inline double gradcheck_sampled(const Tensor<double>& input, const GraphFn& f, int samples, int directions,
                                std::uint64_t seed, double step = 1e-5) {
  Tensor<double> analytic;
  {
    Graph<double> g;
    std::vector<Var<double>> vars{g.variable(input)};
    g.backward(f(g, vars));
    analytic = vars[0].grad();
  }
  auto eval = [&](const Tensor<double>& x) {
    Graph<double> g(false, 0, false);
    std::vector<Var<double>> vars{g.constant(x)};
    return f(g, vars).value()(0, 0);
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, input.size() - 1);
  Eigen::VectorXd an(samples + directions), nu(samples + directions);
  for (int s = 0; s < samples; ++s) {
    const Eigen::Index k = pick(rng);
    Tensor<double> xp = input, xm = input;
    xp.data()[k] += step;
    xm.data()[k] -= step;
    an(s) = analytic.data()[k];
    nu(s) = (eval(xp) - eval(xm)) / (2.0 * step);
  }
  for (int d = 0; d < directions; ++d) {
    Tensor<double> dir(input.rows(), input.cols());
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir.data()[i] = n(rng);
    dir /= dir.norm();
    an(samples + d) = (analytic.array() * dir.array()).sum();
    nu(samples + d) = (eval(input + step * dir) - eval(input - step * dir)) / (2.0 * step);
  }
  return (an - nu).norm() / std::max({an.norm(), nu.norm(), 1e-12});
}

inline Tensor<double> random_tensor(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Tensor<double> t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = d(rng);
  return t;
}

// Overwrites every parameter (biases included) with Gaussian noise so ReLU
// pre-activations sit away from their kink.
inline void randomize(const intertraj::ad::ParameterList<double>& params, std::mt19937_64& rng, double scale) {
  for (const auto& p : params) p.param->value = random_tensor(p.param->value.rows(), p.param->value.cols(), rng, scale);
}

}  // namespace testing

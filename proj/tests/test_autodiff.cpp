#include <doctest.h>

#include <random>

#include "gradcheck.hpp"
#include "intertraj/ad/nn.hpp"
#include "intertraj/ad/optim.hpp"

using namespace intertraj::ad;
using testing::gradcheck_inputs;
using testing::gradcheck_params;
using testing::random_tensor;
using V = Var<double>;
using VS = std::vector<V>;

namespace {

constexpr double kTol = 1e-6;

// Contract to a scalar with fixed random weights so every output entry matters.
V probe(Graph<double>& g, const V& y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return sum(mul(y, g.constant(random_tensor(y.rows(), y.cols(), rng))));
}

// Direct 3x3x3 zero-padded convolution, input layout (z*side + y)*side + x.
Tensor<double> naive_conv3d(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b, int side,
                            int stride) {
  const int cin = static_cast<int>(x.cols()), cout = static_cast<int>(w.cols());
  const int os = (side - 1) / stride + 1;
  const int samples = static_cast<int>(x.rows()) / (side * side * side);
  Tensor<double> out = Tensor<double>::Zero(samples * os * os * os, cout);
  for (int s = 0; s < samples; ++s)
    for (int oz = 0; oz < os; ++oz)
      for (int oy = 0; oy < os; ++oy)
        for (int ox = 0; ox < os; ++ox) {
          const int orow = s * os * os * os + (oz * os + oy) * os + ox;
          for (int co = 0; co < cout; ++co) {
            double acc = b(0, co);
            for (int dz = 0; dz < 3; ++dz)
              for (int dy = 0; dy < 3; ++dy)
                for (int dx = 0; dx < 3; ++dx) {
                  const int iz = oz * stride + dz - 1, iy = oy * stride + dy - 1, ix = ox * stride + dx - 1;
                  if (iz < 0 || iy < 0 || ix < 0 || iz >= side || iy >= side || ix >= side) continue;
                  const int irow = s * side * side * side + (iz * side + iy) * side + ix;
                  const int tap = (dz * 3 + dy) * 3 + dx;
                  for (int ci = 0; ci < cin; ++ci) acc += x(irow, ci) * w(tap * cin + ci, co);
                }
            out(orow, co) = acc;
          }
        }
  return out;
}

}  // namespace

TEST_CASE("elementwise and matrix ops match finite differences") {
  std::mt19937_64 rng(1);
  auto a = random_tensor(3, 4, rng), b = random_tensor(3, 4, rng), c = random_tensor(4, 5, rng);
  auto row = random_tensor(1, 4, rng);

  CHECK(gradcheck_inputs({a, c}, [](Graph<double>& g, const VS& v) { return probe(g, matmul(v[0], v[1])); }) < kTol);
  CHECK(gradcheck_inputs({a, c, random_tensor(1, 5, rng)}, [](Graph<double>& g, const VS& v) {
          return probe(g, linear(v[0], v[1], v[2]));
        }) < kTol);
  CHECK(gradcheck_inputs({a, b}, [](Graph<double>& g, const VS& v) { return probe(g, add(v[0], v[1])); }) < kTol);
  CHECK(gradcheck_inputs({a, b}, [](Graph<double>& g, const VS& v) { return probe(g, sub(v[0], v[1])); }) < kTol);
  CHECK(gradcheck_inputs({a, b}, [](Graph<double>& g, const VS& v) { return probe(g, mul(v[0], v[1])); }) < kTol);
  CHECK(gradcheck_inputs({a, row}, [](Graph<double>& g, const VS& v) { return probe(g, add_row(v[0], v[1])); }) <
        kTol);
  auto tall = random_tensor(6, 4, rng);
  CHECK(gradcheck_inputs({tall, b}, [](Graph<double>& g, const VS& v) { return probe(g, add_tiled(v[0], v[1])); }) <
        kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, scale(v[0], 2.5)); }) < kTol);
  CHECK(gradcheck_inputs({a}, [&](Graph<double>& g, const VS& v) { return probe(g, scale_cols(v[0], row)); }) <
        kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, add_scalar(v[0], 2.5)); }) < kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, relu(v[0])); }) < kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, sigmoid(v[0])); }) < kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, tanh(v[0])); }) < kTol);
}

TEST_CASE("structural ops match finite differences") {
  std::mt19937_64 rng(2);
  auto a = random_tensor(4, 3, rng), b = random_tensor(4, 2, rng), c = random_tensor(2, 3, rng);
  CHECK(gradcheck_inputs({a, b}, [](Graph<double>& g, const VS& v) { return probe(g, concat_cols(VS{v[0], v[1]})); }) <
        kTol);
  CHECK(gradcheck_inputs({a, c}, [](Graph<double>& g, const VS& v) { return probe(g, concat_rows(VS{v[0], v[1]})); }) <
        kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, slice_cols(v[0], 1, 2)); }) < kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, slice_rows(v[0], 1, 2)); }) < kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) {
          return probe(g, gather_rows(v[0], std::vector<Eigen::Index>{3, 0, 3, 1}));
        }) < kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, repeat_rows(v[0], 3)); }) < kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, tile_rows(v[0], 3)); }) < kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, reshape(v[0], 2, 6)); }) < kTol);
  CHECK(gradcheck_inputs({a}, [](Graph<double>& g, const VS& v) { return probe(g, group_mean_rows(v[0], 2)); }) <
        kTol);
}

TEST_CASE("repeat_rows and tile_rows layouts") {
  Graph<double> g;
  Tensor<double> a(2, 1);
  a << 1, 2;
  auto x = g.constant(a);
  Tensor<double> rep = repeat_rows(x, 2).value(), til = tile_rows(x, 2).value();
  CHECK(rep(0, 0) == 1);
  CHECK(rep(1, 0) == 1);
  CHECK(rep(2, 0) == 2);
  CHECK(til(0, 0) == 1);
  CHECK(til(1, 0) == 2);
  CHECK(til(2, 0) == 1);
}

TEST_CASE("losses match closed forms and finite differences") {
  std::mt19937_64 rng(3);
  auto p = random_tensor(3, 5, rng, 2.0), t = random_tensor(3, 5, rng, 2.0);
  Tensor<double> bits = (random_tensor(3, 5, rng).array() > 0.0).cast<double>().matrix();

  CHECK(gradcheck_inputs({p, t}, [](Graph<double>&, const VS& v) { return smooth_l1_mean(v[0], v[1]); }) < kTol);
  CHECK(gradcheck_inputs({p, t}, [](Graph<double>&, const VS& v) { return l1_mean(v[0], v[1]); }) < kTol);
  CHECK(gradcheck_inputs({p, t}, [](Graph<double>&, const VS& v) { return mse_mean(v[0], v[1]); }) < kTol);
  CHECK(gradcheck_inputs({p}, [&](Graph<double>& g, const VS& v) {
          return bce_with_logits_mean(v[0], g.constant(bits));
        }) < kTol);
  CHECK(gradcheck_inputs({p}, [](Graph<double>&, const VS& v) {
          return cross_entropy_mean(v[0], std::vector<int>{4, 0, 2});
        }) < kTol);

  Graph<double> g;
  auto pv = g.constant(p), tv = g.constant(t);
  const Eigen::ArrayXXd d = (p - t).array();
  const double sl1 = (d.abs() < 1.0).select(0.5 * d.square(), d.abs() - 0.5).mean();
  CHECK(smooth_l1_mean(pv, tv).value()(0, 0) == doctest::Approx(sl1).epsilon(1e-12));
  CHECK(l1_mean(pv, tv).value()(0, 0) == doctest::Approx(d.abs().mean()).epsilon(1e-12));
  CHECK(mse_mean(pv, tv).value()(0, 0) == doctest::Approx(d.square().mean()).epsilon(1e-12));
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-p.array()).exp());
  const double bce = -(bits.array() * s.log() + (1.0 - bits.array()) * (1.0 - s).log()).mean();
  CHECK(bce_with_logits_mean(pv, g.constant(bits)).value()(0, 0) == doctest::Approx(bce).epsilon(1e-10));
  double ce = 0.0;
  const int tgt[3] = {4, 0, 2};
  for (int r = 0; r < 3; ++r) ce += std::log(p.row(r).array().exp().sum()) - p(r, tgt[r]);
  CHECK(cross_entropy_mean(pv, std::vector<int>{4, 0, 2}).value()(0, 0) == doctest::Approx(ce / 3).epsilon(1e-10));

  auto w = weighted_sum(VS{l1_mean(pv, tv), mse_mean(pv, tv)}, std::vector<double>{2.0, 0.5});
  CHECK(w.value()(0, 0) == doctest::Approx(2.0 * d.abs().mean() + 0.5 * d.square().mean()));
}

TEST_CASE("bce with large logits stays finite") {
  Graph<double> g;
  Tensor<double> z(1, 2);
  z << 800.0, -800.0;
  Tensor<double> y(1, 2);
  y << 0.0, 1.0;
  CHECK(std::isfinite(bce_with_logits_mean(g.constant(z), g.constant(y)).value()(0, 0)));
}

TEST_CASE("layer norm and attention match finite differences") {
  std::mt19937_64 rng(4);
  auto x = random_tensor(4, 6, rng), gamma = random_tensor(1, 6, rng), beta = random_tensor(1, 6, rng);
  CHECK(gradcheck_inputs({x, gamma, beta}, [](Graph<double>& g, const VS& v) {
          return probe(g, layer_norm(v[0], v[1], v[2]));
        }) < 1e-5);

  auto q = random_tensor(6, 4, rng), k = random_tensor(10, 4, rng), val = random_tensor(10, 4, rng);
  CHECK(gradcheck_inputs({q, k, val}, [](Graph<double>& g, const VS& v) {
          return probe(g, attention(v[0], v[1], v[2], 2));
        }) < kTol);
}

TEST_CASE("attention matches a direct softmax reference") {
  std::mt19937_64 rng(5);
  auto q = random_tensor(4, 3, rng), k = random_tensor(6, 3, rng), v = random_tensor(6, 3, rng);
  Graph<double> g;
  Tensor<double> out = attention(g.constant(q), g.constant(k), g.constant(v), 2).value();
  for (int b = 0; b < 2; ++b) {
    Eigen::MatrixXd s = q.middleRows(2 * b, 2) * k.middleRows(3 * b, 3).transpose() / std::sqrt(3.0);
    for (int r = 0; r < 2; ++r) {
      Eigen::RowVectorXd e = (s.row(r).array() - s.row(r).maxCoeff()).exp();
      e /= e.sum();
      Eigen::RowVectorXd ref = e * v.middleRows(3 * b, 3);
      CHECK((out.row(2 * b + r) - ref).norm() < 1e-12);
    }
  }
}

TEST_CASE("geometry ops match finite differences") {
  std::mt19937_64 rng(6);
  CHECK(gradcheck_inputs({random_tensor(3, 6, rng)}, [](Graph<double>& g, const VS& v) {
          return probe(g, rot6d_to_rotmat(v[0]));
        }) < kTol);
  CHECK(gradcheck_inputs({random_tensor(3, 9, rng), random_tensor(3, 9, rng)}, [](Graph<double>& g, const VS& v) {
          return probe(g, bmm33(v[0], v[1]));
        }) < kTol);
  CHECK(gradcheck_inputs({random_tensor(3, 9, rng), random_tensor(3, 3, rng)}, [](Graph<double>& g, const VS& v) {
          return probe(g, bmv33(v[0], v[1]));
        }) < kTol);
  CHECK(gradcheck_inputs({random_tensor(3, 9, rng), random_tensor(3, 3, rng)}, [](Graph<double>& g, const VS& v) {
          return probe(g, pack_rigid(v[0], v[1]));
        }) < kTol);

  Tensor<double> weights = random_tensor(5, 2, rng).cwiseAbs();
  CHECK(gradcheck_inputs({random_tensor(2, 24, rng), random_tensor(2, 15, rng)}, [&](Graph<double>& g, const VS& v) {
          return probe(g, blend_skin(v[0], v[1], weights));
        }) < kTol);

  Tensor<double> w = random_tensor(2, 5, rng).cwiseAbs();
  CHECK(gradcheck_inputs({random_tensor(2, 15, rng), w}, [](Graph<double>& g, const VS& v) {
          return probe(g, weighted_centroid(v[0], v[1]));
        }) < kTol);
}

TEST_CASE("rot6d_to_rotmat produces rotations with the first column preserved in direction") {
  std::mt19937_64 rng(7);
  Graph<double> g;
  auto x = random_tensor(20, 6, rng);
  Tensor<double> r = rot6d_to_rotmat(g.constant(x)).value();
  for (int i = 0; i < 20; ++i) {
    Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> R(r.row(i).data());
    CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(R.determinant() == doctest::Approx(1.0));
    Eigen::Vector3d a1(x(i, 0), x(i, 1), x(i, 2));
    CHECK((R.col(0) - a1.normalized()).norm() < 1e-12);
  }
}

TEST_CASE("weighted centroid of zero weights is the origin") {
  Graph<double> g;
  auto x = g.variable(Tensor<double>::Ones(1, 6));
  auto w = g.variable(Tensor<double>::Zero(1, 2));
  auto c = weighted_centroid(x, w);
  CHECK(c.value().norm() == 0.0);
  g.backward(sum(c));
}

TEST_CASE("conv3d matches a direct convolution and finite differences") {
  std::mt19937_64 rng(8);
  for (int stride : {1, 2}) {
    const int side = 4, cin = 2, cout = 3;
    auto x = random_tensor(2 * side * side * side, cin, rng);
    auto w = random_tensor(27 * cin, cout, rng);
    auto b = random_tensor(1, cout, rng);
    Graph<double> g;
    Tensor<double> out = conv3d(g.constant(x), g.constant(w), g.constant(b), side, stride).value();
    CHECK((out - naive_conv3d(x, w, b, side, stride)).norm() < 1e-10);
    CHECK(gradcheck_inputs({x, w, b}, [&](Graph<double>& gg, const VS& v) {
            return probe(gg, conv3d(v[0], v[1], v[2], side, stride));
          }) < kTol);
  }
  CHECK(conv3_output_side(16, 2) == 8);
  CHECK(conv3_output_side(8, 2) == 4);
  CHECK(conv3_output_side(4, 1) == 4);
}

TEST_CASE("straight-through passes the gradient unchanged") {
  Graph<double> g;
  auto x = g.variable(Tensor<double>::Constant(2, 3, 0.3));
  Tensor<double> q = Tensor<double>::Constant(2, 3, 7.0);
  auto y = straight_through(x, q);
  CHECK(y.value() == q);
  g.backward(sum(scale(y, 2.0)));
  CHECK((x.grad().array() == 2.0).all());
}

TEST_CASE("detach and frozen parameters block gradients") {
  Parameter<double> p(Tensor<double>::Ones(2, 2));
  Graph<double> g;
  auto x = g.variable(Tensor<double>::Ones(2, 2));
  auto y = add(detach(x), g.param(p, false));
  CHECK_FALSE(y.requires_grad());
  auto z = add(x, g.param(p, false));
  g.backward(sum(z));
  CHECK(p.grad.norm() == 0.0);
  CHECK(x.grad().sum() == 4.0);
}

TEST_CASE("dropout is identity at evaluation and unbiased in training") {
  Graph<double> eval(false, 3);
  auto a = eval.constant(Tensor<double>::Ones(100, 100));
  CHECK(dropout(a, 0.1).value() == a.value());
  Graph<double> train(true, 3);
  auto b = train.constant(Tensor<double>::Ones(200, 200));
  CHECK(dropout(b, 0.1).value().mean() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("layers backpropagate into their parameters") {
  std::mt19937_64 rng(9);
  TransformerDims dims{8, 12, 0.0};
  TransformerEncoderLayer<double> enc(dims, rng);
  TransformerDecoderLayer<double> dec(dims, rng);
  Mlp<double> mlp({8, 6, 4}, rng);
  ParameterList<double> params;
  enc.collect("enc", params);
  dec.collect("dec", params);
  mlp.collect("mlp", params);
  auto x = random_tensor(6, 8, rng);
  auto m = random_tensor(4, 8, rng);
  double err = gradcheck_params(params, [&](Graph<double>& g) {
    auto h = enc(g, g.constant(x), 2);
    auto d = dec(g, h, g.constant(m), 2);
    return probe(g, mlp(g, d));
  });
  CHECK(err < 1e-5);

  Conv3d<double> conv(2, 3, 2, rng);
  ParameterList<double> cp;
  conv.collect("conv", cp);
  auto vol = random_tensor(64, 2, rng);
  CHECK(gradcheck_params(cp, [&](Graph<double>& g) { return probe(g, conv(g, g.constant(vol), 4)); }) < kTol);
  CHECK(parameter_count(cp) == 27 * 2 * 3 + 3);
}

TEST_CASE("adam minimizes a quadratic and clip_grad_norm rescales") {
  Parameter<double> p(Tensor<double>::Constant(1, 3, 5.0));
  ParameterList<double> params{{"p", &p}};
  Adam<double> opt(params, AdamOptions{0.1});
  for (int i = 0; i < 500; ++i) {
    zero_grad(params);
    Graph<double> g;
    g.backward(mse_mean(g.param(p), g.constant(Tensor<double>::Zero(1, 3))));
    opt.step();
  }
  CHECK(p.value.norm() < 1e-2);
  CHECK(opt.steps() == 500);

  p.grad = Tensor<double>::Constant(1, 3, 4.0);
  const double before = clip_grad_norm(params, 1.0);
  CHECK(before == doctest::Approx(std::sqrt(48.0)));
  CHECK(p.grad.norm() == doctest::Approx(1.0));
}

TEST_CASE("backward requires a scalar") {
  Graph<double> g;
  auto x = g.variable(Tensor<double>::Ones(2, 2));
  CHECK_THROWS_AS(g.backward(x), intertraj::InvalidArgument);
}

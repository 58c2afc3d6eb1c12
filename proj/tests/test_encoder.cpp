#include <cmath>

#include "amanda/encoder.hpp"
#include "amanda/gradcheck.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace amanda;
using amanda::testing::contract;
using amanda::testing::random_tensor;
using amanda::testing::row_sum;

namespace {

struct LayerTensors {
  Tensor<double> fwx, fwh, fb, bwx, bwh, bb;
};

LayerTensors random_layer(std::size_t d, std::size_t h, std::mt19937_64& rng) {
  return {random_tensor({d, 4 * h}, rng), random_tensor({h, 4 * h}, rng), random_tensor({4 * h}, rng),
          random_tensor({d, 4 * h}, rng), random_tensor({h, 4 * h}, rng), random_tensor({4 * h}, rng)};
}

BiLstmVars<double> constants(Graph<double>& g, const LayerTensors& l) {
  return {{g.constant(l.fwx), g.constant(l.fwh), g.constant(l.fb)},
          {g.constant(l.bwx), g.constant(l.bwh), g.constant(l.bb)}};
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("bilstm_encode zero weights give zero outputs") {
  std::mt19937_64 rng(1);
  Graph<double> g;
  LayerTensors z{Tensor<double>::zeros({3, 8}), Tensor<double>::zeros({2, 8}), Tensor<double>::zeros({8}),
                 Tensor<double>::zeros({3, 8}), Tensor<double>::zeros({2, 8}), Tensor<double>::zeros({8})};
  auto out = bilstm_encode(constants(g, z), g.constant(random_tensor({4, 3}, rng)), Mask{1, 1, 1, 1});
  CHECK(out.shape() == Shape{4, 4});
  for (double v : out.value().data) CHECK(v == 0.0);
}

TEST_CASE("bilstm_encode single step matches hand cell arithmetic") {
  // d = h = 1; gates packed [i, f, o, g].
  Graph<double> g;
  LayerTensors l{Tensor<double>::matrix(1, 4, {0.5, -0.3, 0.8, 1.2}), Tensor<double>::matrix(1, 4, {0.1, 0.2, 0.3, 0.4}),
                 Tensor<double>::vector({0.1, 1.0, -0.2, 0.05}), Tensor<double>::matrix(1, 4, {-0.4, 0.2, 0.6, -0.9}),
                 Tensor<double>::matrix(1, 4, {0.0, 0.0, 0.0, 0.0}), Tensor<double>::vector({0.0, 0.0, 0.3, 0.1})};
  const double x = 0.7;
  auto out = bilstm_encode(constants(g, l), g.constant(Tensor<double>::matrix(1, 1, {x})), Mask{1});
  auto cell = [&](const Tensor<double>& wx, const Tensor<double>& b) {
    const double i = sig(wx.data[0] * x + b.data[0]);
    const double o = sig(wx.data[2] * x + b.data[2]);
    const double c = i * std::tanh(wx.data[3] * x + b.data[3]);
    return o * std::tanh(c);
  };
  CHECK(out.value().data[0] == doctest::Approx(cell(l.fwx, l.fb)).epsilon(1e-12));
  CHECK(out.value().data[1] == doctest::Approx(cell(l.bwx, l.bb)).epsilon(1e-12));
}

TEST_CASE("bilstm_encode masks padded steps and sees both directions") {
  std::mt19937_64 rng(2);
  auto layer = random_layer(3, 2, rng);
  auto x = random_tensor({5, 3}, rng);
  Graph<double> g;
  auto padded = bilstm_encode(constants(g, layer), g.constant(x), Mask{1, 1, 1, 0, 0});
  for (std::size_t t = 3; t < 5; ++t) {
    for (std::size_t c = 0; c < 4; ++c) CHECK(padded.value().at(t, c) == 0.0);
  }
  // Padding does not leak into real steps.
  Tensor<double> x3({3, 3}, std::vector<double>(x.data.begin(), x.data.begin() + 9));
  auto trimmed = bilstm_encode(constants(g, layer), g.constant(x3), Mask{1, 1, 1});
  for (std::size_t i = 0; i < 12; ++i) CHECK(trimmed.value().data[i] == padded.value().data[i]);

  // Perturbing the last step changes the backward half of the first step.
  auto y = x;
  y.at(4, 0) += 0.5;
  auto a = bilstm_encode(constants(g, layer), g.constant(x), Mask{1, 1, 1, 1, 1});
  auto b = bilstm_encode(constants(g, layer), g.constant(y), Mask{1, 1, 1, 1, 1});
  CHECK(a.value().at(0, 2) != b.value().at(0, 2));
  CHECK(a.value().at(0, 0) == b.value().at(0, 0));
}

TEST_CASE("attention_matrix examples") {
  Graph<double> g;
  auto p = g.constant(Tensor<double>::matrix(2, 2, {1, 0, 0.3, -0.4}));
  auto q = g.constant(Tensor<double>::matrix(2, 2, {0, 1, 1, 0}));
  auto a = attention_matrix(p, q);
  CHECK(a.value().at(0, 0) == 0.0);  // orthogonal
  CHECK(a.value().at(0, 1) == 1.0);  // same unit vector
  CHECK(a.value().at(1, 0) == doctest::Approx(-0.4));
  CHECK(a.value().at(1, 1) == doctest::Approx(0.3));
}

TEST_CASE("question_dependent_encoding examples and invariants") {
  std::mt19937_64 rng(4);
  const std::size_t T = 3, U = 3, H = 4;
  auto P = random_tensor({T, H}, rng);
  auto Q = random_tensor({U, H}, rng);
  auto layer = random_layer(2 * H, H / 2, rng);
  Graph<double> g;
  // A with a dominant entry makes R one-hot; a constant row makes it uniform.
  auto A = Tensor<double>::matrix(T, U, {0, 200, 0, 1, 1, 1, 0.3, -0.2, 0.9});
  const Mask qmask{1, 1, 0};
  auto qd = question_dependent_encoding(g.constant(P), g.constant(Q), g.constant(A), Mask{1, 1, 1}, qmask,
                                        constants(g, layer));
  const auto& G = qd.G.value();
  for (std::size_t c = 0; c < H; ++c) {
    CHECK(G.at(0, c) == doctest::Approx(Q.at(1, c)).epsilon(1e-12));
    CHECK(G.at(1, c) == doctest::Approx(0.5 * (Q.at(0, c) + Q.at(1, c))).epsilon(1e-12));
  }
  for (std::size_t r = 0; r < T; ++r) {
    CHECK(row_sum(qd.R.value(), r) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(qd.R.value().at(r, 2) == 0.0);
  }
  CHECK(qd.S.shape() == Shape{T, 2 * H});
  CHECK(qd.V.shape() == Shape{T, H});

  // Hand oracle for row 2 of G.
  const double m = std::max(0.3, -0.2);
  const double e0 = std::exp(0.3 - m), e1 = std::exp(-0.2 - m);
  for (std::size_t c = 0; c < H; ++c) {
    CHECK(G.at(2, c) == doctest::Approx((e0 * Q.at(0, c) + e1 * Q.at(1, c)) / (e0 + e1)).epsilon(1e-12));
  }
}

TEST_CASE("A is equivariant to passage permutations without recurrence") {
  std::mt19937_64 rng(6);
  auto x = random_tensor({4, 3}, rng);
  auto q = random_tensor({2, 3}, rng);
  LayerTensors l = random_layer(3, 2, rng);
  for (auto* t : {&l.fwh, &l.bwh}) t->data.assign(t->data.size(), 0.0);
  Graph<double> g;
  auto layer = constants(g, l);
  auto swapped = x;
  for (std::size_t c = 0; c < 3; ++c) std::swap(swapped.at(0, c), swapped.at(2, c));
  auto Q = bilstm_encode(layer, g.constant(q), Mask{1, 1});
  // Shut the forget gate so no state carries between steps either.
  LayerTensors nf = l;
  for (auto* b : {&nf.fb, &nf.bb}) {
    for (std::size_t i = 2; i < 4; ++i) b->data[i] = -1e3;  // forget gate shut
  }
  for (auto* w : {&nf.fwx, &nf.bwx}) {
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t i = 2; i < 4; ++i) w->at(r, i) = 0.0;
    }
  }
  auto shut = constants(g, nf);
  auto a1 = attention_matrix(bilstm_encode(shut, g.constant(x), Mask{1, 1, 1, 1}), Q).value();
  auto a2 = attention_matrix(bilstm_encode(shut, g.constant(swapped), Mask{1, 1, 1, 1}), Q).value();
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(a1.at(0, c) == doctest::Approx(a2.at(2, c)).epsilon(1e-12));
    CHECK(a1.at(2, c) == doctest::Approx(a2.at(0, c)).epsilon(1e-12));
    CHECK(a1.at(1, c) == doctest::Approx(a2.at(1, c)).epsilon(1e-12));
  }
}

TEST_CASE("encoder stack passes finite differences") {
  std::mt19937_64 rng(8);
  auto layer = random_layer(3, 2, rng);
  auto qdep = random_layer(8, 2, rng);
  auto xp = random_tensor({4, 3}, rng);
  auto xq = random_tensor({3, 3}, rng);
  const Mask pm{1, 1, 1, 0}, qm{1, 1, 0};
  auto model = [&](Graph<double>& g, Var<double> wx) {
    BiLstmVars<double> l{{wx, g.constant(layer.fwh), g.constant(layer.fb)},
                         {g.constant(layer.bwx), g.constant(layer.bwh), g.constant(layer.bb)}};
    auto P = bilstm_encode(l, g.constant(xp), pm);
    auto Q = bilstm_encode(l, g.constant(xq), qm);
    auto qd = question_dependent_encoding(P, Q, attention_matrix(P, Q), pm, qm, constants(g, qdep));
    return contract(qd.V, 21);
  };
  CHECK(finite_diff_check(model, layer.fwx) < 1e-3);
  auto through_input = [&](Graph<double>& g, Var<double> x) {
    return contract(bilstm_encode(constants(g, layer), x, Mask{1, 1, 1, 1}), 22);
  };
  CHECK(finite_diff_check(through_input, xp) < 1e-4);
}

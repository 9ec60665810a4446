#include <doctest.h>

#include <cmath>
#include <numbers>

#include "alsent/nn/adam.hpp"
#include "alsent/nn/layers.hpp"
#include "alsent/nn/network.hpp"
#include "alsent/nn/ops.hpp"
#include "support/layer_probe.hpp"

using namespace alsent::nn;
using namespace alsent::nn::probe;

namespace {

const ForwardOptions kTrainNoDropout{Phase::kTrain, false};

}  // namespace

TEST_CASE("rng stream is reproducible and unbiased-looking") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RngStream c(1);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = c.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 20000 - 0.5) < 0.01);
  std::vector<int> v{1, 2, 3, 4, 5};
  RngStream d(3);
  d.shuffle(v);
  std::sort(v.begin(), v.end());
  CHECK(v == std::vector<int>{1, 2, 3, 4, 5});
  CHECK(derive_seed(7, 1) != derive_seed(7, 2));
  // std::mt19937_64's 10000th output for the default seed is fixed by the standard.
  RngStream e(5489);
  for (int i = 0; i < 9999; ++i) e.next_u64();
  CHECK(e.next_u64() == 9981545732273789042ULL);
}

TEST_CASE("embedding lookup and gradient") {
  RngStream rng(1);
  Embedding emb("emb", 2, 2, rng);
  emb.weights().value = Tensor2D::Identity(2, 2);
  const Activations out = emb.forward({{0}});
  CHECK(out.steps.front().row(0) == emb.weights().value.row(0));
  const Activations rep = emb.forward({{1, 1}});
  CHECK(rep.steps[0] == rep.steps[1]);
  CHECK_THROWS_AS(emb.forward({{2}}), IndexError);
  CHECK_THROWS_AS(emb.forward({{-1}}), IndexError);

  Embedding big("emb", 7, 3, rng);
  const IdBatch ids{{1, 3, 3, 0}, {6, 1, 2, 3}};
  RngStream rr(9);
  std::vector<Tensor2D> readout;
  for (int t = 0; t < 4; ++t) readout.push_back(random_tensor(2, 3, rr));
  big.weights().zero_grad();
  big.forward(ids);
  big.backward({readout, true});
  const auto loss = [&] {
    const Activations a = big.forward(ids);
    double total = 0.0;
    for (int t = 0; t < 4; ++t) total += (a.steps[static_cast<std::size_t>(t)].array() * readout[static_cast<std::size_t>(t)].array()).sum();
    return total;
  };
  CHECK(compare_with_finite_differences({&big.weights()}, loss, 1e-5).max_relative_error < 1e-4);
  // Row 4 and 5 are never looked up.
  CHECK(big.weights().grad.row(4).isZero());
}

TEST_CASE("simple_rnn_step") {
  const Tensor2D x = Tensor2D::Constant(2, 3, 0.7);
  const Tensor2D h = Tensor2D::Constant(2, 4, -0.2);
  const Tensor2D zeros_x = Tensor2D::Zero(3, 4), zeros_h = Tensor2D::Zero(4, 4);
  CHECK(simple_rnn_step(x, h, zeros_x, zeros_h, Tensor2D::Zero(1, 4)).isZero());
  const Tensor2D saturated = simple_rnn_step(x, h, zeros_x, zeros_h, Tensor2D::Constant(1, 4, 20.0));
  CHECK((saturated.array() - 1.0).abs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(simple_rnn_step(x, h, Tensor2D::Zero(2, 4), zeros_h, Tensor2D::Zero(1, 4)), ShapeError);
  CHECK_THROWS_AS(simple_rnn_step(x, h, zeros_x, zeros_h, Tensor2D::Zero(1, 3)), ShapeError);
}

TEST_CASE("simple rnn layer matches its step function and finite differences") {
  RngStream rng(11);
  SimpleRnnLayer layer("rnn", 2, 3, {}, true, rng);
  layer.parameters()[2]->value = random_tensor(1, 3, rng, 0.5);
  const Activations in = random_sequence(4, 2, 5, rng);
  RngStream unused(0);
  const Activations out = layer.forward(in, kTrainNoDropout, unused);
  Tensor2D h = Tensor2D::Zero(4, 3);
  for (int t = 0; t < 5; ++t) {
    h = simple_rnn_step(in.steps[static_cast<std::size_t>(t)], h, layer.parameters()[0]->value,
                        layer.parameters()[1]->value, layer.parameters()[2]->value);
    CHECK((h - out.steps[static_cast<std::size_t>(t)]).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(layer_gradient_error(layer, in, kTrainNoDropout) < 1e-4);
  SimpleRnnLayer last("rnn_last", 2, 3, {}, false, rng);
  CHECK(layer_gradient_error(last, in, kTrainNoDropout) < 1e-4);
}

TEST_CASE("lstm_step gate algebra") {
  const Eigen::Index u = 3;
  const Tensor2D x = Tensor2D::Constant(2, 2, 0.4);
  const Tensor2D h = Tensor2D::Constant(2, u, 0.3);
  RngStream rng(4);
  const Tensor2D c = random_tensor(2, u, rng);
  const auto out = lstm_step(x, h, c, Tensor2D::Zero(2, 4 * u), Tensor2D::Zero(u, 4 * u), Tensor2D::Zero(1, 4 * u));
  const Tensor2D expected_c = 0.5 * c;
  CHECK((out.c - expected_c).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((out.h - (0.5 * (0.5 * c.array()).tanh()).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  const auto zero = lstm_step(x, h, Tensor2D::Zero(2, u), Tensor2D::Zero(2, 4 * u), Tensor2D::Zero(u, 4 * u),
                              Tensor2D::Zero(1, 4 * u));
  CHECK(zero.h.isZero());
  CHECK_THROWS_AS(lstm_step(x, h, Tensor2D::Zero(2, u + 1), Tensor2D::Zero(2, 4 * u), Tensor2D::Zero(u, 4 * u),
                            Tensor2D::Zero(1, 4 * u)),
                  ShapeError);
}

TEST_CASE("lstm layer matches step function and finite differences") {
  RngStream rng(12);
  LstmLayer layer("lstm", 3, 4, {}, true, rng);
  layer.parameters()[2]->value += random_tensor(1, 16, rng, 0.3);
  const Activations in = random_sequence(3, 3, 5, rng);
  RngStream unused(0);
  const Activations out = layer.forward(in, kTrainNoDropout, unused);
  Tensor2D h = Tensor2D::Zero(3, 4), c = Tensor2D::Zero(3, 4);
  for (std::size_t t = 0; t < 5; ++t) {
    const auto s = lstm_step(in.steps[t], h, c, layer.parameters()[0]->value, layer.parameters()[1]->value,
                             layer.parameters()[2]->value);
    h = s.h;
    c = s.c;
    CHECK((h - out.steps[t]).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(layer_gradient_error(layer, in, kTrainNoDropout) < 1e-4);
  // Forget-gate bias starts at one.
  LstmLayer fresh("fresh", 3, 4, {}, false, rng);
  CHECK(fresh.parameters()[2]->value.middleCols(4, 4).isOnes());
  CHECK(fresh.parameters()[2]->value.leftCols(4).isZero());
}

TEST_CASE("recurrent dropout masks are fixed per sequence and differentiate correctly") {
  RngStream rng(13);
  LstmLayer layer("lstm", 3, 4, {0.5, 0.5}, false, rng);
  const Activations in = random_sequence(4, 3, 5, rng);
  CHECK(layer_gradient_error(layer, in, {Phase::kTrain, true}) < 1e-4);
  GruLayer gru("gru", 3, 4, {0.5, 0.5}, true, rng);
  CHECK(layer_gradient_error(gru, in, {Phase::kTrain, true}) < 1e-4);
  SimpleRnnLayer rnn("rnn", 3, 4, {0.2, 0.2}, true, rng);
  CHECK(layer_gradient_error(rnn, in, {Phase::kTrain, true}) < 1e-4);
}

TEST_CASE("gru_step") {
  const Eigen::Index u = 3;
  RngStream rng(6);
  const Tensor2D x = random_tensor(2, 2, rng);
  const Tensor2D zero_h = Tensor2D::Zero(2, u);
  CHECK(gru_step(x, zero_h, Tensor2D::Zero(2, 3 * u), Tensor2D::Zero(u, 3 * u), Tensor2D::Zero(1, 3 * u)).isZero());
  const Tensor2D h = random_tensor(2, u, rng);
  Tensor2D b = Tensor2D::Zero(1, 3 * u);
  b.leftCols(u).setConstant(-40.0);
  const Tensor2D carried = gru_step(x, h, random_tensor(2, 3 * u, rng), random_tensor(u, 3 * u, rng), b);
  CHECK((carried - h).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(gru_step(x, h, Tensor2D::Zero(2, 4 * u), Tensor2D::Zero(u, 3 * u), b), ShapeError);
}

TEST_CASE("gru layer matches step function and finite differences") {
  RngStream rng(14);
  GruLayer layer("gru", 3, 4, {}, true, rng);
  layer.parameters()[2]->value = random_tensor(1, 12, rng, 0.3);
  const Activations in = random_sequence(3, 3, 5, rng);
  RngStream unused(0);
  const Activations out = layer.forward(in, kTrainNoDropout, unused);
  Tensor2D h = Tensor2D::Zero(3, 4);
  for (std::size_t t = 0; t < 5; ++t) {
    h = gru_step(in.steps[t], h, layer.parameters()[0]->value, layer.parameters()[1]->value,
                 layer.parameters()[2]->value);
    CHECK((h - out.steps[t]).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(layer_gradient_error(layer, in, kTrainNoDropout) < 1e-4);
}

TEST_CASE("batch norm") {
  RngStream rng(15);
  BatchNormLayer bn("bn", 3);
  bn.beta().value << 0.1, 0.2, 0.3;

  SUBCASE("constant column maps to beta") {
    Tensor2D x = random_tensor(5, 3, rng);
    x.col(1).setConstant(4.2);
    const Activations out = bn.forward(Activations::single(x), kTrainNoDropout, rng);
    CHECK((out.steps[0].col(1).array() - 0.2).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("inference with unit running stats is the identity") {
    BatchNormLayer fresh("bn", 3);
    const Tensor2D x = random_tensor(4, 3, rng);
    const Activations out = fresh.forward(Activations::single(x), {Phase::kInfer, false}, rng);
    CHECK((out.steps[0] - x).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((out.steps[0] * std::sqrt(1.0 + BatchNormLayer::kEpsilon) - x).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("train output is standardized before scale and shift") {
    BatchNormLayer fresh("bn", 3);
    const Activations in = random_sequence(6, 3, 4, rng);
    const Activations out = fresh.forward(in, kTrainNoDropout, rng);
    for (Eigen::Index f = 0; f < 3; ++f) {
      double mean = 0.0, sq = 0.0, var_in = 0.0, mean_in = 0.0;
      for (const auto& s : out.steps) mean += s.col(f).sum();
      for (const auto& s : in.steps) mean_in += s.col(f).sum();
      mean /= 24.0;
      mean_in /= 24.0;
      for (const auto& s : out.steps) sq += (s.col(f).array() - mean).square().sum();
      for (const auto& s : in.steps) var_in += (s.col(f).array() - mean_in).square().sum();
      CHECK(std::abs(mean) < 1e-10);
      // Variance is v / (v + eps) with eps = 1e-3.
      CHECK(std::abs(sq / 24.0 - (var_in / 24.0) / (var_in / 24.0 + BatchNormLayer::kEpsilon)) < 1e-6);
    }
    // Running statistics moved 1% toward the batch statistics.
    CHECK(fresh.moving_variance().value(0, 0) != 1.0);
  }
  SUBCASE("gradients for gamma, beta and input") {
    bn.gamma().value = random_tensor(1, 3, rng) ;
    CHECK(layer_gradient_error(bn, Activations::single(random_tensor(5, 3, rng)), kTrainNoDropout) < 1e-4);
    CHECK(layer_gradient_error(bn, random_sequence(3, 3, 4, rng), kTrainNoDropout) < 1e-4);
  }
  SUBCASE("degenerate batch") {
    CHECK_THROWS_AS(bn.forward(Activations::single(random_tensor(1, 3, rng)), kTrainNoDropout, rng), DegenerateBatch);
    CHECK_NOTHROW(bn.forward(Activations::single(random_tensor(1, 3, rng)), {Phase::kInfer, false}, rng));
  }
}

TEST_CASE("dropout mask") {
  RngStream rng(16);
  CHECK(dropout_mask(3, 4, 0.0, rng).isOnes());
  const Tensor2D m = dropout_mask(100, 100, 0.5, rng);
  // Entries are 0 or 2 with equal odds: variance 1, so the mean of 10,000 has sd 0.01.
  CHECK(std::abs(m.mean() - 1.0) < 0.03);
  CHECK(((m.array() == 0.0) || (m.array() == 2.0)).all());
  RngStream a(77), b(77);
  CHECK(dropout_mask(5, 5, 0.3, a) == dropout_mask(5, 5, 0.3, b));
  CHECK_THROWS(dropout_mask(1, 1, 1.0, rng));
}

TEST_CASE("dense layer, sigmoid and softmax") {
  const Tensor2D h = Tensor2D::Constant(2, 3, 0.5);
  CHECK(dense_forward(h, Tensor2D::Zero(3, 1), Tensor2D::Zero(1, 1), OutputActivation::kSigmoid).isApproxToConstant(0.5));
  CHECK(dense_forward(h, Tensor2D::Zero(3, 3), Tensor2D::Zero(1, 3), OutputActivation::kSoftmax)
            .isApproxToConstant(1.0 / 3.0, 1e-15));
  RngStream rng(17);
  const Tensor2D logits = random_tensor(50, 4, rng, 30.0);
  const Tensor2D shifted = (logits.array() + 1000.0).matrix();
  const Tensor2D p = softmax_rows(logits);
  CHECK((p - softmax_rows(shifted)).cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index r = 0; r < p.rows(); ++r) CHECK(std::abs(p.row(r).sum() - 1.0) < 1e-12);
  const Tensor2D s = sigmoid(random_tensor(50, 1, rng, 30.0));
  CHECK(((s.array() > 0.0) && (s.array() < 1.0)).all());
  CHECK_THROWS_AS(dense_forward(h, Tensor2D::Zero(2, 1), Tensor2D::Zero(1, 1), OutputActivation::kSigmoid), ShapeError);

  DenseLayer dense("dense", 3, 2, rng);
  CHECK(layer_gradient_error(dense, Activations::single(random_tensor(4, 3, rng)), kTrainNoDropout) < 1e-4);
  CHECK_THROWS_AS(dense.forward(random_sequence(2, 3, 2, rng), kTrainNoDropout, rng), ShapeError);
}

TEST_CASE("losses") {
  CHECK(bce_loss(0.5, 1) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(bce_loss(1.0, 1) <= -std::log(1.0 - 1e-7) + 1e-18);
  CHECK(bce_loss(0.0, 0) <= -std::log(1.0 - 1e-7) + 1e-18);
  CHECK(std::isfinite(bce_loss(0.0, 1)));
  CHECK(categorical_ce({0.2, 0.5, 0.3}, 1) == doctest::Approx(-std::log(0.5)));

  for (double p : {0.03, 0.2, 0.5, 0.77, 0.99}) {
    for (int y : {0, 1}) {
      const double h = 1e-6;
      const double numeric = (bce_loss(p + h, y) - bce_loss(p - h, y)) / (2 * h);
      CHECK(std::abs(bce_loss_grad(p, y) - numeric) / std::abs(numeric) < 1e-6);
    }
  }
  const std::vector<double> dist{0.1, 0.6, 0.3};
  for (int cls = 0; cls < 3; ++cls) {
    const auto g = categorical_ce_grad(dist, cls);
    for (std::size_t j = 0; j < 3; ++j) {
      auto up = dist, down = dist;
      up[j] += 1e-6;
      down[j] -= 1e-6;
      const double numeric = (categorical_ce(up, cls) - categorical_ce(down, cls)) / 2e-6;
      CHECK(std::abs(g[j] - numeric) <= 1e-6 * std::max(1.0, std::abs(numeric)));
    }
  }

  // Batch losses through the logits, both heads.
  RngStream rng(18);
  for (int classes : {2, 3}) {
    Parameter logits("logits", random_tensor(5, classes == 2 ? 1 : 3, rng, 2.0));
    const std::vector<int> labels{0, 1, 1, 0, classes - 1};
    logits.grad = output_loss(logits.value, labels, classes).grad_logits;
    const auto loss = [&] { return output_loss(logits.value, labels, classes).loss; };
    CHECK(compare_with_finite_differences({&logits}, loss, 1e-5).max_relative_error < 1e-6);
  }
  const Tensor2D dist2 = output_distribution(Tensor2D::Zero(3, 1), 2);
  CHECK(dist2.isApproxToConstant(0.5));
}

TEST_CASE("adam") {
  Parameter p("w", Tensor2D::Constant(2, 2, 3.0));
  Adam zero;
  zero.step({&p});
  CHECK(p.value.isApproxToConstant(3.0, 0.0));
  CHECK(zero.steps() == 1);

  Adam adam;
  p.grad.setOnes();
  adam.step({&p});
  // m_hat = v_hat = 1, so each entry moves by lr / (1 + eps).
  CHECK(((p.value.array() - 3.0).abs() - 0.001).abs().maxCoeff() < 1e-6);
  CHECK(p.grad.isZero());
  CHECK((adam.second_moments()[0].array() >= 0.0).all());

  Parameter a("a", Tensor2D::Constant(1, 3, 1.0)), b("b", Tensor2D::Constant(1, 3, 1.0));
  Adam adam_a, adam_b;
  for (int i = 0; i < 5; ++i) {
    a.grad.setConstant(0.1 * i);
    b.grad.setConstant(0.1 * i);
    adam_a.step({&a});
    adam_b.step({&b});
  }
  CHECK(a.value == b.value);

  Adam clipped(AdamConfig{0.001, 0.9, 0.999, 1e-8, 1.0});
  Parameter c("c", Tensor2D::Zero(1, 2));
  c.grad << 300.0, 400.0;
  clipped.step({&c});
  CHECK(std::abs(c.value(0, 0) + 0.001) < 1e-6);
}

TEST_CASE("grad_check helper on a linear model with quadratic loss") {
  RngStream rng(19);
  Parameter w("w", random_tensor(3, 1, rng));
  const Tensor2D x = random_tensor(6, 3, rng);
  const Tensor2D y = random_tensor(6, 1, rng);
  const auto loss = [&] { return 0.5 * (x * w.value - y).squaredNorm(); };
  w.grad = x.transpose() * (x * w.value - y);
  CHECK(compare_with_finite_differences({&w}, loss, 1e-5).max_relative_error < 1e-9);
  CHECK_THROWS(compare_with_finite_differences({&w}, loss, 0.0));
  const auto bad = [] { return std::nan(""); };
  CHECK_THROWS_AS(compare_with_finite_differences({&w}, bad, 1e-5), NumericalError);
}

TEST_CASE("network copies are deep") {
  RngStream rng(20);
  std::vector<std::unique_ptr<Layer>> layers;
  layers.push_back(std::make_unique<LstmLayer>("lstm", 4, 3, DropoutSpec{}, false, rng));
  layers.push_back(std::make_unique<DenseLayer>("dense", 3, 1, rng));
  Network net(Embedding("embedding", 10, 4, rng), std::move(layers), 2);
  Network copy = net;
  net.parameters()[1]->value.setZero();
  CHECK_FALSE(copy.parameters()[1]->value.isZero());
  const IdBatch ids{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  CHECK(grad_check(copy, ids, {0, 1, 1}).max_relative_error < 1e-4);
  CHECK_THROWS(grad_check(copy, ids, {0, 1, 1}, 0.0));
}

TEST_CASE("const evaluation matches forward and leaves state alone") {
  RngStream rng(21);
  std::vector<std::unique_ptr<Layer>> layers;
  layers.push_back(std::make_unique<GruLayer>("gru", 5, 4, DropoutSpec{0.5, 0.5}, true, rng));
  layers.push_back(std::make_unique<BatchNormLayer>("bn1", 4));
  layers.push_back(std::make_unique<SimpleRnnLayer>("rnn", 4, 3, DropoutSpec{0.2, 0.2}, false, rng));
  layers.push_back(std::make_unique<BatchNormLayer>("bn2", 3));
  layers.push_back(std::make_unique<DenseLayer>("dense", 3, 3, rng));
  Network net(Embedding("embedding", 12, 5, rng), std::move(layers), 3);
  const IdBatch ids{{1, 2, 3, 4}, {5, 6, 7, 8}, {9, 10, 11, 0}};
  RngStream unused(0);

  for (Phase phase : {Phase::kInfer, Phase::kTrain}) {
    std::vector<Tensor2D> before;
    for (Parameter* b : net.buffers()) before.push_back(b->value);
    const Tensor2D evaluated = net.evaluate<double>(ids, phase);
    const ExtendedTensor extended = net.evaluate<long double>(ids, phase);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(net.buffers()[i]->value == before[i]);
    Network copy = net;
    const Tensor2D forwarded = copy.forward(ids, {phase, false}, unused);
    CHECK(evaluated == forwarded);
    CHECK((extended.cast<double>() - forwarded).cwiseAbs().maxCoeff() < 1e-12);
  }
}

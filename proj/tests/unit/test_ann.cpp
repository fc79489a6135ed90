#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ann_oracles.hpp"
#include "fixtures.hpp"
#include "prognos/errors.hpp"
#include "prognos/metrics.hpp"

using namespace prognos;

namespace {

// 200 samples with a 0.2-wide margin around every class boundary.
struct Separable {
  Matrix x;
  std::vector<LabelVector> labels;
};

Separable separable_fixture(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Separable s{Matrix(n, 6), std::vector<LabelVector>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    std::array<bool, 6> bits{};
    for (std::size_t j = 0; j < 6; ++j) {
      bits[j] = rng.uniform() < 0.5;
      s.x(i, j) = bits[j] ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
    }
    LabelVector& l = s.labels[i];
    l.hs = bits[0];
    l.ef.fan = bits[1];
    l.ef.lpc = bits[2];
    l.ef.hpc = bits[3];
    l.ef.hpt = bits[4];
    l.ef.lpt = bits[5];
    l.rul = static_cast<int>(std::lround(20.0 * s.x(i, 0) + 10.0 * s.x(i, 3)));
  }
  return s;
}

ModelParams toy_network() {
  // 2 inputs -> 2 -> 2 -> 7.
  ModelParams m;
  m.w1 = Matrix(2, 2);
  m.w1(0, 0) = 1.0;
  m.w1(0, 1) = -1.0;
  m.w1(1, 0) = 0.5;
  m.w1(1, 1) = 2.0;
  m.b1 = {0.0, -1.0};
  m.w2 = Matrix(2, 2);
  m.w2(0, 0) = 2.0;
  m.w2(0, 1) = 1.0;
  m.w2(1, 0) = -1.0;
  m.w2(1, 1) = 1.0;
  m.b2 = {0.5, 0.0};
  m.w3 = Matrix(7, 2);
  for (std::size_t j = 0; j < 7; ++j) {
    m.w3(j, 0) = 0.1 * static_cast<double>(j);
    m.w3(j, 1) = -0.2;
  }
  m.b3 = {0, 0, 0, 0, 0, 0, 1.0};
  return m;
}

}  // namespace

TEST_SUITE("ann") {

TEST_CASE("parameter counts") {
  CHECK(init_network(129, 1).parameter_count() == 10631);
  CHECK(parameter_count_for(129) == 10631);
  CHECK(init_network(1, 1).parameter_count() == 2439);
  CHECK(init_network(10, 1).parameter_count() == 10 * 64 + 64 + 64 * 32 + 32 + 32 * 7 + 7);
  const ModelParams m = init_network(129, 3);
  CHECK(m.w1.rows() == 64);
  CHECK(m.w1.cols() == 129);
  CHECK(m.w2.rows() == 32);
  CHECK(m.w3.rows() == 7);
  std::size_t total = 0;
  for (const auto t : m.tensors()) total += t.size();
  CHECK(total == 10631);
}

TEST_CASE("initialisation is glorot-uniform with zero biases") {
  const ModelParams m = init_network(129, 7);
  CHECK(m == init_network(129, 7));
  CHECK_FALSE(m == init_network(129, 8));
  const double bound1 = std::sqrt(6.0 / (129 + 64));
  for (double v : m.w1.data()) CHECK(std::abs(v) <= bound1);
  for (double v : m.w3.data()) CHECK(std::abs(v) <= std::sqrt(6.0 / (32 + 7)));
  for (double v : m.b1) CHECK(v == 0.0);
  for (double v : m.b3) CHECK(v == 0.0);
  for (const auto t : m.tensors())
    for (double v : t) CHECK(std::isfinite(v));
}

TEST_CASE("zero network outputs one half and zero RUL") {
  const ModelParams z = init_network(5, 1).zeros_like();
  Rng rng(2);
  const PredictionBatch out = forward(z, test::random_matrix(4, 5, rng), LossKind::kComposite);
  for (double v : out.class_probs.data()) CHECK(v == 0.5);
  for (double v : out.rul_pred) CHECK(v == 0.0);
}

TEST_CASE("toy forward pass matches hand arithmetic") {
  // x = [1, 2]: z1 = [1 - 2, 0.5 + 4 - 1] = [-1, 3.5], h1 = [0, 3.5];
  // z2 = [0 + 3.5 + 0.5, 0 + 3.5] = [4, 3.5], h2 = [4, 3.5];
  // z3_j = 0.4 j - 0.7 (+1 for RUL).
  Matrix x(1, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;
  const ModelParams m = toy_network();
  const PredictionBatch mse = forward(m, x, LossKind::kMse);
  const PredictionBatch comp = forward(m, x, LossKind::kComposite);
  for (std::size_t j = 0; j < 6; ++j) {
    const double z = 0.4 * static_cast<double>(j) - 0.7;
    CHECK(mse.class_probs(0, j) == doctest::Approx(z).epsilon(1e-15));
    CHECK(comp.class_probs(0, j) == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-15));
  }
  CHECK(mse.rul_pred[0] == doctest::Approx(0.4 * 6 - 0.7 + 1.0).epsilon(1e-15));
  CHECK(comp.rul_pred[0] == mse.rul_pred[0]);
}

TEST_CASE("negative pre-activations do not reach the next layer") {
  ModelParams m = toy_network();
  Matrix x(1, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;
  const PredictionBatch before = forward(m, x, LossKind::kMse);
  // Unit 0 of layer 1 is inactive (z = -1), so its outgoing weights are inert.
  m.w2(0, 0) = 123.0;
  m.w2(1, 0) = -77.0;
  const PredictionBatch after = forward(m, x, LossKind::kMse);
  CHECK(before.class_probs == after.class_probs);
  CHECK(before.rul_pred == after.rul_pred);
}

TEST_CASE("forward rejects width mismatch") {
  CHECK_THROWS_AS(forward(init_network(3, 1), Matrix(2, 4), LossKind::kComposite), DataError);
}

TEST_CASE("backprop matches central differences") {
  Rng rng(31);
  TrainConfig cfg;
  for (int trial = 0; trial < 5; ++trial) {
    const auto batch = test::make_grad_check_batch(4, 5, rng);
    const auto result = test::check_network_gradient(batch, cfg);
    CHECK(result.checked == init_network(4, 0).parameter_count());
    CHECK(result.worst_relative < 1e-4);
  }
}

TEST_CASE("mse-mode backprop matches central differences") {
  Rng rng(32);
  TrainConfig cfg;
  cfg.loss = LossKind::kMse;
  // Targets of 100 push the loss to ~1e4, where differencing roundoff alone
  // nears the tolerance; the scale is a constant on the targets.
  cfg.label_scale = 1.0;
  const auto batch = test::make_grad_check_batch(3, 5, rng);
  CHECK(test::check_network_gradient(batch, cfg).worst_relative < 1e-4);
}

TEST_CASE("training separates a separable fixture") {
  const Separable s = separable_fixture(200, 4);
  TrainConfig cfg;
  cfg.epochs = 3000;
  cfg.seed = 5;
  const TrainResult r = train(s.x, s.labels, cfg);
  REQUIRE(r.loss_history.size() == 3000);
  CHECK(r.loss_history.back() < r.loss_history.front());

  const PredictionBatch out = predict(r.params, s.x, cfg);
  const LabelBatch lb = make_label_batch(s.labels);
  CHECK(bce(lb.classes, out.class_probs) < 0.05);
  for (std::size_t j = 0; j < 6; ++j) {
    std::vector<int> y(200);
    std::vector<double> score(200);
    for (std::size_t i = 0; i < 200; ++i) {
      y[i] = static_cast<int>(lb.classes(i, j));
      score[i] = out.class_probs(i, j);
    }
    CHECK(test::brute_auroc(y, score) == 1.0);
  }
}

TEST_CASE("training is deterministic and row-order insensitive") {
  const Separable s = separable_fixture(40, 6);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 9;
  const TrainResult a = train(s.x, s.labels, cfg);
  const TrainResult b = train(s.x, s.labels, cfg);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.params == b.params);

  Separable reversed{Matrix(40, 6), std::vector<LabelVector>(s.labels.rbegin(), s.labels.rend())};
  for (std::size_t i = 0; i < 40; ++i)
    std::copy(s.x.row(39 - i).begin(), s.x.row(39 - i).end(), reversed.x.row(i).begin());
  const TrainResult c = train(reversed.x, reversed.labels, cfg);
  for (std::size_t e = 0; e < a.loss_history.size(); ++e) {
    CHECK(c.loss_history[e] == doctest::Approx(a.loss_history[e]).epsilon(1e-9));
  }
}

TEST_CASE("mse mode learns scaled labels") {
  const Separable s = separable_fixture(100, 8);
  TrainConfig cfg;
  cfg.loss = LossKind::kMse;
  cfg.epochs = 400;
  const TrainResult r = train(s.x, s.labels, cfg);
  CHECK(r.loss_history.back() < 0.5 * r.loss_history.front());
}

TEST_CASE("predict rescales mse scores and rectifies RUL") {
  ModelParams m = init_network(2, 1).zeros_like();
  for (std::size_t j = 0; j < 6; ++j) m.b3[j] = 87.0;
  m.b3[6] = -3.2;
  const Matrix x(1, 2, 0.3);
  TrainConfig cfg;
  cfg.loss = LossKind::kMse;
  const PredictionBatch raw = predict(m, x, cfg);
  CHECK(raw.class_probs(0, 0) == doctest::Approx(0.87).epsilon(1e-15));
  CHECK(raw.rul_pred[0] == -3.2);
  cfg.rul_rectify = true;
  CHECK(predict(m, x, cfg).rul_pred[0] == 0.0);
  cfg.loss = LossKind::kComposite;
  CHECK(predict(m, x, cfg).class_probs(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-87.0))));
}

TEST_CASE("divergence is reported with the epoch") {
  const Separable s = separable_fixture(20, 10);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.adam.step_size = 1e300;
  try {
    train(s.x, s.labels, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.label_scale = 0.0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK_THROWS_AS(train(Matrix(1, 2), std::vector<LabelVector>(1), TrainConfig{}), DataError);
  CHECK(parse_loss_kind("mse") == LossKind::kMse);
  CHECK_THROWS_AS(parse_loss_kind("hinge"), ConfigError);
}

TEST_CASE("model json round trip is bit exact") {
  TrainConfig cfg;
  cfg.seed = 12;
  cfg.epochs = 77;
  cfg.loss_config.gamma = 2.5;
  const ModelParams m = init_network(9, 4);
  const std::string text = ann_to_json(m, cfg, "deadbeef");
  const AnnArtifact back = ann_from_json(text);
  CHECK(back.params == m);
  CHECK(back.schema_hash == "deadbeef");
  CHECK(back.config.epochs == 77);
  CHECK(back.config.loss_config.gamma == 2.5);
  CHECK(ann_to_json(back.params, back.config, back.schema_hash) == text);
  CHECK_THROWS_AS(ann_from_json("{\"kind\": \"forest\"}"), DataError);
}

}

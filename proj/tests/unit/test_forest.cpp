#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "prognos/errors.hpp"
#include "prognos/forest.hpp"

using namespace prognos;

namespace {

// Smooth multi-output target with noise, n x 7.
struct Regression {
  Matrix x;
  Matrix y;
};

Regression regression_fixture(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  Regression r{test::random_matrix(n, p, rng, 0.0, 1.0), Matrix(n, kNumOutputs)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kNumClassHeads; ++j) {
      r.y(i, j) = r.x(i, j % p) + 0.3 * r.x(i, (j + 1) % p) > 0.65 ? 100.0 : 0.0;
    }
    r.y(i, 6) = 80.0 * r.x(i, 0) + 10.0 * std::sin(6.0 * r.x(i, 1 % p)) + rng.normal();
  }
  return r;
}

double training_mse(const ForestModel& model, const Regression& r) {
  const Matrix pred = forest_predict_raw(model, r.x);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - r.y.data()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

void check_leaf_bounds(const ForestModel& model, const Matrix& y) {
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      for (std::size_t k = 0; k < kNumOutputs; ++k) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < y.rows(); ++i) {
          lo = std::min(lo, y(i, k));
          hi = std::max(hi, y(i, k));
        }
        CHECK(node.value[k] >= lo);
        CHECK(node.value[k] <= hi);
      }
    }
  }
}

}  // namespace

TEST_SUITE("forest") {

TEST_CASE("label scaling") {
  LabelVector l;
  l.hs = 1;
  l.ef = failure_flags_for_subset("DS06");
  l.rul = 75;
  const std::vector<LabelVector> labels{l};
  const Matrix y = scale_labels(labels, 100.0);
  CHECK(std::vector<double>(y.row(0).begin(), y.row(0).end()) ==
        std::vector<double>{100, 0, 100, 100, 0, 0, 75});
  const Matrix unit = scale_labels(labels, 1.0);
  CHECK(std::vector<double>(unit.row(0).begin(), unit.row(0).end()) ==
        std::vector<double>{1, 0, 1, 1, 0, 0, 75});
  LabelVector zero;
  zero.hs = 0;
  zero.rul = 12;
  const std::vector<LabelVector> zeros{zero};
  const Matrix z = scale_labels(zeros, 100.0);
  CHECK(std::vector<double>(z.row(0).begin(), z.row(0).end()) ==
        std::vector<double>{0, 0, 0, 0, 0, 0, 12});
}

TEST_CASE("single step is split once and fitted exactly") {
  Matrix x(2, 1);
  x(1, 0) = 1.0;
  Matrix y(2, kNumOutputs);
  y(1, 6) = 10.0;
  y(1, 0) = 100.0;
  for (auto variant : {ForestVariant::kRf, ForestVariant::kErf}) {
    ForestConfig cfg;
    cfg.variant = variant;
    cfg.n_estimators = 1;
    cfg.bootstrap = false;
    const ForestModel m = fit_forest(x, y, cfg);
    REQUIRE(m.trees.size() == 1);
    CHECK(m.trees[0].nodes.size() == 3);
    CHECK(m.trees[0].nodes[0].feature == 0);
    if (variant == ForestVariant::kRf) CHECK(m.trees[0].nodes[0].threshold == 0.5);
    CHECK(forest_predict_raw(m, x) == y);
  }
}

TEST_CASE("pure targets give single-leaf trees") {
  Rng rng(1);
  const Matrix x = test::random_matrix(30, 4, rng);
  Matrix y(30, kNumOutputs, 3.0);
  ForestConfig cfg;
  cfg.n_estimators = 5;
  const ForestModel m = fit_forest(x, y, cfg);
  for (const auto& tree : m.trees) {
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].value[6] == 3.0);
  }
}

TEST_CASE("one tree on its training points returns leaf means") {
  const Regression r = regression_fixture(60, 3, 2);
  ForestConfig cfg;
  cfg.n_estimators = 1;
  cfg.bootstrap = false;
  const ForestModel m = fit_forest(r.x, r.y, cfg);
  // Distinct inputs and unlimited depth: every training point is its own leaf.
  CHECK(test::max_abs_diff(forest_predict_raw(m, r.x), r.y) <= 1e-9);
}

TEST_CASE("same seed gives identical forests") {
  const Regression r = regression_fixture(80, 5, 3);
  for (auto variant : {ForestVariant::kRf, ForestVariant::kErf}) {
    ForestConfig cfg;
    cfg.variant = variant;
    cfg.n_estimators = 6;
    cfg.seed = 44;
    const ForestModel a = fit_forest(r.x, r.y, cfg);
    CHECK(a == fit_forest(r.x, r.y, cfg));
    cfg.seed = 45;
    CHECK_FALSE(a == fit_forest(r.x, r.y, cfg));
  }
}

TEST_CASE("trees depend only on their own stream") {
  const Regression r = regression_fixture(50, 4, 4);
  ForestConfig cfg;
  cfg.n_estimators = 3;
  cfg.seed = 8;
  const ForestModel small = fit_forest(r.x, r.y, cfg);
  cfg.n_estimators = 7;
  const ForestModel big = fit_forest(r.x, r.y, cfg);
  for (std::size_t t = 0; t < 3; ++t) CHECK(small.trees[t] == big.trees[t]);
}

TEST_CASE("leaves and predictions stay within the training target range") {
  const Regression r = regression_fixture(70, 4, 5);
  Rng rng(6);
  const Matrix probe = test::random_matrix(40, 4, rng, -2.0, 3.0);
  for (auto variant : {ForestVariant::kRf, ForestVariant::kErf}) {
    ForestConfig cfg;
    cfg.variant = variant;
    cfg.n_estimators = 8;
    const ForestModel m = fit_forest(r.x, r.y, cfg);
    check_leaf_bounds(m, r.y);
    const Matrix pred = forest_predict_raw(m, probe);
    for (std::size_t i = 0; i < pred.rows(); ++i) {
      for (std::size_t k = 0; k < kNumOutputs; ++k) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t s = 0; s < r.y.rows(); ++s) {
          lo = std::min(lo, r.y(s, k));
          hi = std::max(hi, r.y(s, k));
        }
        CHECK(pred(i, k) >= lo);
        CHECK(pred(i, k) <= hi);
      }
    }
  }
}

TEST_CASE("forest predictions divide class columns by the scale") {
  const Regression r = regression_fixture(40, 3, 7);
  ForestConfig cfg;
  cfg.n_estimators = 4;
  const ForestModel m = fit_forest(r.x, r.y, cfg);
  const Matrix raw = forest_predict_raw(m, r.x);
  const PredictionBatch out = forest_predict(m, r.x, 100.0);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (std::size_t j = 0; j < kNumClassHeads; ++j) CHECK(out.class_probs(i, j) == raw(i, j) / 100.0);
    CHECK(out.rul_pred[i] == raw(i, 6));
  }
  CHECK_THROWS_AS(forest_predict(m, Matrix(2, 4), 100.0), DataError);
}

TEST_CASE("training mse does not grow with more trees on average") {
  const Regression r = regression_fixture(120, 4, 8);
  for (auto variant : {ForestVariant::kRf, ForestVariant::kErf}) {
    double mse_small = 0.0, mse_large = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      ForestConfig cfg;
      cfg.variant = variant;
      cfg.seed = seed;
      cfg.bootstrap = true;
      cfg.n_estimators = 2;
      mse_small += training_mse(fit_forest(r.x, r.y, cfg), r);
      cfg.n_estimators = 20;
      mse_large += training_mse(fit_forest(r.x, r.y, cfg), r);
    }
    CHECK(mse_large <= mse_small);
  }
}

TEST_CASE("depth and leaf-size limits") {
  const Regression r = regression_fixture(60, 3, 9);
  ForestConfig cfg;
  cfg.n_estimators = 2;
  cfg.max_depth = 2;
  const ForestModel m = fit_forest(r.x, r.y, cfg);
  for (const auto& tree : m.trees) CHECK(tree.nodes.size() <= 7);
}

TEST_CASE("forest errors") {
  ForestConfig cfg;
  cfg.n_estimators = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK_THROWS_AS(fit_forest(Matrix(1, 2), Matrix(1, 7), ForestConfig{}), DataError);
  Matrix y(3, 7);
  y(1, 2) = INFINITY;
  CHECK_THROWS_AS(fit_forest(Matrix(3, 2), y, ForestConfig{}), DataError);
  CHECK(parse_forest_variant("erf") == ForestVariant::kErf);
  CHECK_THROWS_AS(parse_forest_variant("gbm"), ConfigError);
}

TEST_CASE("forest json round trip is bit exact") {
  const Regression r = regression_fixture(40, 3, 10);
  ForestConfig cfg;
  cfg.variant = ForestVariant::kErf;
  cfg.n_estimators = 3;
  cfg.seed = 5;
  const ForestModel m = fit_forest(r.x, r.y, cfg);
  const std::string text = forest_to_json(m, 100.0, "cafe");
  const ForestArtifact back = forest_from_json(text);
  CHECK(back.model == m);
  CHECK(back.label_scale == 100.0);
  CHECK(back.schema_hash == "cafe");
  CHECK(forest_to_json(back.model, back.label_scale, back.schema_hash) == text);
}

}

#pragma once

// Multi-output regression-tree ensembles: random forest (bootstrap samples,
// best midpoint threshold per feature) and extremely randomized trees (full
// sample, one uniform random threshold per feature). Both grow unpruned trees
// over all features, maximising the variance reduction summed over the seven
// outputs.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prognos/loss.hpp"
#include "prognos/matrix.hpp"
#include "prognos/types.hpp"

namespace prognos {

enum class ForestVariant { kRf, kErf };

std::string_view to_string(ForestVariant variant);
ForestVariant parse_forest_variant(std::string_view text);

struct ForestConfig {
  int n_estimators = 100;
  ForestVariant variant = ForestVariant::kRf;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_leaf = 1;
  std::optional<bool> bootstrap;  // unset: rf yes, erf no
  std::uint64_t seed = 0;

  bool uses_bootstrap() const { return bootstrap.value_or(variant == ForestVariant::kRf); }
};

void validate(const ForestConfig& config);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::array<double, kNumOutputs> value{};  // mean target of the node's samples

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const std::array<double, kNumOutputs>& evaluate(std::span<const double> x) const;
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct ForestModel {
  ForestConfig config;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;

  friend bool operator==(const ForestModel& a, const ForestModel& b) {
    return a.n_features == b.n_features && a.trees == b.trees;
  }
};

// n x 7 targets: the six class bits times `scale`, then RUL unchanged.
Matrix scale_labels(std::span<const LabelVector> labels, double scale);

// Tree t draws from its own stream derive_seed(config.seed, t). Throws
// DataError for n < 2, shape mismatches or non-finite targets.
ForestModel fit_forest(const Matrix& x, const Matrix& y, const ForestConfig& config);

// Mean over trees of the leaf 7-vectors (n x 7).
Matrix forest_predict_raw(const ForestModel& model, const Matrix& x);

// Class columns divided by `scale` to serve as scores; column 7 is RUL.
PredictionBatch forest_predict(const ForestModel& model, const Matrix& x, double scale);

std::string forest_to_json(const ForestModel& model, double label_scale,
                           const std::string& schema_hash);

struct ForestArtifact {
  ForestModel model;
  double label_scale = 100.0;
  std::string schema_hash;
};
ForestArtifact forest_from_json(std::string_view text);

}  // namespace prognos

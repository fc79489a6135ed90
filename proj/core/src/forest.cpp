#include "prognos/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_util.hpp"
#include "prognos/errors.hpp"
#include "prognos/random.hpp"

namespace prognos {
namespace {

constexpr std::size_t kOut = kNumOutputs;
constexpr double kPureVariance = 1e-12;

using Sums = std::array<double, kOut>;

// Sum over outputs of S_k^2 / count: the quantity a split maximises.
double split_score(const Sums& left, double n_left, const Sums& right, double n_right) {
  double score = 0.0;
  for (std::size_t k = 0; k < kOut; ++k) {
    score += left[k] * left[k] / n_left + right[k] * right[k] / n_right;
  }
  return score;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns, const Matrix& y,
              const ForestConfig& config, std::uint64_t seed)
      : columns_(columns), y_(y), config_(config), rng_(seed) {}

  RegressionTree build() {
    const std::size_t n = y_.rows();
    std::vector<int> samples(n);
    if (config_.uses_bootstrap()) {
      for (auto& s : samples) s = static_cast<int>(rng_.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    const std::size_t m = samples.size();
    const std::size_t p = columns_.size();
    const bool presort = config_.variant == ForestVariant::kRf;

    // order_[f] holds the node's samples sorted by feature f (rf), or a
    // single list in arbitrary order (erf).
    order_.assign(presort ? p : 1, {});
    for (auto& list : order_) list = samples;
    if (presort) {
      for (std::size_t f = 0; f < p; ++f) {
        const auto& col = columns_[f];
        std::stable_sort(order_[f].begin(), order_[f].end(),
                         [&](int a, int b) { return col[a] < col[b]; });
      }
    }
    goes_left_.assign(y_.rows(), 0);
    scratch_.resize(m);

    struct Task {
      int node;
      std::size_t begin;
      std::size_t end;
      int depth;
    };
    RegressionTree tree;
    tree.nodes.emplace_back();
    std::vector<Task> stack{{0, 0, m, 0}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      const std::span<const int> members(order_[0].data() + task.begin, task.end - task.begin);

      Sums total{};
      for (const int s : members) {
        const auto row = y_.row(static_cast<std::size_t>(s));
        for (std::size_t k = 0; k < kOut; ++k) total[k] += row[k];
      }
      const double count = static_cast<double>(members.size());
      auto& mean = tree.nodes[task.node].value;
      for (std::size_t k = 0; k < kOut; ++k) mean[k] = total[k] / count;
      double variance = 0.0;
      for (const int s : members) {
        const auto row = y_.row(static_cast<std::size_t>(s));
        for (std::size_t k = 0; k < kOut; ++k) variance += (row[k] - mean[k]) * (row[k] - mean[k]);
      }
      variance /= count;

      const bool depth_limited = config_.max_depth > 0 && task.depth >= config_.max_depth;
      if (variance <= kPureVariance || members.size() < 2 * static_cast<std::size_t>(config_.min_samples_leaf) ||
          depth_limited) {
        continue;
      }

      const SplitChoice split = presort ? best_exhaustive(task.begin, task.end, total)
                                        : best_random(members, total);
      if (split.feature < 0) continue;

      const auto& col = columns_[static_cast<std::size_t>(split.feature)];
      std::size_t n_left = 0;
      for (const int s : members) {
        goes_left_[static_cast<std::size_t>(s)] = col[s] <= split.threshold ? 1 : 0;
        n_left += goes_left_[static_cast<std::size_t>(s)];
      }
      for (auto& list : order_) partition(list, task.begin, task.end);

      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& node = tree.nodes[task.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      const std::size_t mid = task.begin + n_left;
      // Right first so the left subtree is expanded first.
      stack.push_back({left + 1, mid, task.end, task.depth + 1});
      stack.push_back({left, task.begin, mid, task.depth + 1});
    }
    return tree;
  }

 private:
  SplitChoice best_exhaustive(std::size_t begin, std::size_t end, const Sums& total) {
    SplitChoice best;
    const std::size_t count = end - begin;
    const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
    for (std::size_t f = 0; f < columns_.size(); ++f) {
      const auto& col = columns_[f];
      const int* sorted = order_[f].data() + begin;
      if (col[sorted[0]] == col[sorted[count - 1]]) continue;
      Sums left{};
      for (std::size_t k = 0; k + 1 < count; ++k) {
        const auto row = y_.row(static_cast<std::size_t>(sorted[k]));
        for (std::size_t o = 0; o < kOut; ++o) left[o] += row[o];
        const double lo = col[sorted[k]];
        const double hi = col[sorted[k + 1]];
        if (lo == hi) continue;
        const std::size_t n_left = k + 1;
        if (n_left < min_leaf || count - n_left < min_leaf) continue;
        Sums right;
        for (std::size_t o = 0; o < kOut; ++o) right[o] = total[o] - left[o];
        const double score = split_score(left, static_cast<double>(n_left), right,
                                         static_cast<double>(count - n_left));
        if (best.feature < 0 || score > best.score) {
          double threshold = lo + (hi - lo) / 2.0;
          if (!(threshold < hi)) threshold = lo;
          best = {static_cast<int>(f), threshold, score};
        }
      }
    }
    return best;
  }

  SplitChoice best_random(std::span<const int> members, const Sums& total) {
    SplitChoice best;
    const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
    for (std::size_t f = 0; f < columns_.size(); ++f) {
      const auto& col = columns_[f];
      double lo = col[members[0]];
      double hi = lo;
      for (const int s : members) {
        lo = std::min(lo, col[s]);
        hi = std::max(hi, col[s]);
      }
      if (lo == hi) continue;
      double threshold = rng_.uniform(lo, hi);
      if (threshold >= hi) threshold = lo;
      Sums left{};
      std::size_t n_left = 0;
      for (const int s : members) {
        if (col[s] > threshold) continue;
        ++n_left;
        const auto row = y_.row(static_cast<std::size_t>(s));
        for (std::size_t o = 0; o < kOut; ++o) left[o] += row[o];
      }
      const std::size_t n_right = members.size() - n_left;
      if (n_left < min_leaf || n_right < min_leaf) continue;
      Sums right;
      for (std::size_t o = 0; o < kOut; ++o) right[o] = total[o] - left[o];
      const double score = split_score(left, static_cast<double>(n_left), right,
                                       static_cast<double>(n_right));
      if (best.feature < 0 || score > best.score) best = {static_cast<int>(f), threshold, score};
    }
    return best;
  }

  // Stable partition of list[begin, end) by goes_left_.
  void partition(std::vector<int>& list, std::size_t begin, std::size_t end) {
    std::size_t write = begin;
    std::size_t spill = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const int s = list[k];
      if (goes_left_[static_cast<std::size_t>(s)]) {
        list[write++] = s;
      } else {
        scratch_[spill++] = s;
      }
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(spill),
              list.begin() + static_cast<std::ptrdiff_t>(write));
  }

  const std::vector<std::vector<double>>& columns_;
  const Matrix& y_;
  const ForestConfig& config_;
  Rng rng_;
  std::vector<std::vector<int>> order_;
  std::vector<char> goes_left_;
  std::vector<int> scratch_;
};

}  // namespace

std::string_view to_string(ForestVariant variant) {
  return variant == ForestVariant::kRf ? "rf" : "erf";
}

ForestVariant parse_forest_variant(std::string_view text) {
  if (text == "rf") return ForestVariant::kRf;
  if (text == "erf") return ForestVariant::kErf;
  throw ConfigError("unknown forest variant '" + std::string(text) + "' (expected rf|erf)");
}

void validate(const ForestConfig& config) {
  if (config.n_estimators < 1) throw ConfigError("forest: n_estimators must be >= 1");
  if (config.min_samples_leaf < 1) throw ConfigError("forest: min_samples_leaf must be >= 1");
  if (config.max_depth < 0) throw ConfigError("forest: max_depth must be >= 0");
}

const std::array<double, kNumOutputs>& RegressionTree::evaluate(std::span<const double> x) const {
  const TreeNode* node = &nodes[0];
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(
        x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right)];
  }
  return node->value;
}

Matrix scale_labels(std::span<const LabelVector> labels, double scale) {
  Matrix y(labels.size(), kNumOutputs);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto bits = labels[i].class_bits();
    for (std::size_t j = 0; j < kNumClassHeads; ++j) y(i, j) = bits[j] * scale;
    y(i, kNumClassHeads) = labels[i].rul;
  }
  return y;
}

ForestModel fit_forest(const Matrix& x, const Matrix& y, const ForestConfig& config) {
  validate(config);
  if (x.rows() < 2) throw DataError("fit_forest: need at least 2 samples");
  if (y.rows() != x.rows() || y.cols() != kNumOutputs) {
    throw DataError("fit_forest: targets must be n x 7 aligned with features");
  }
  for (const double v : y.data()) {
    if (!std::isfinite(v)) throw DataError("fit_forest: non-finite target");
  }
  for (const double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("fit_forest: non-finite feature");
  }

  std::vector<std::vector<double>> columns(x.cols(), std::vector<double>(x.rows()));
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t f = 0; f < x.cols(); ++f) columns[f][i] = x(i, f);

  ForestModel model;
  model.config = config;
  model.n_features = x.cols();
  model.trees.reserve(static_cast<std::size_t>(config.n_estimators));
  for (int t = 0; t < config.n_estimators; ++t) {
    TreeBuilder builder(columns, y, config, derive_seed(config.seed, static_cast<std::uint64_t>(t)));
    model.trees.push_back(builder.build());
  }
  return model;
}

Matrix forest_predict_raw(const ForestModel& model, const Matrix& x) {
  if (x.cols() != model.n_features) {
    throw DataError("forest expects " + std::to_string(model.n_features) + " columns, got " +
                    std::to_string(x.cols()));
  }
  Matrix out(x.rows(), kNumOutputs);
  const double inv = 1.0 / static_cast<double>(model.trees.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    for (const auto& tree : model.trees) {
      const auto& leaf = tree.evaluate(x.row(i));
      for (std::size_t k = 0; k < kNumOutputs; ++k) dst[k] += leaf[k];
    }
    for (auto& v : dst) v *= inv;
  }
  return out;
}

PredictionBatch forest_predict(const ForestModel& model, const Matrix& x, double scale) {
  const Matrix raw = forest_predict_raw(model, x);
  PredictionBatch batch;
  batch.class_probs = Matrix(raw.rows(), kNumClassHeads);
  batch.rul_pred.resize(raw.rows());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (std::size_t j = 0; j < kNumClassHeads; ++j) batch.class_probs(i, j) = raw(i, j) / scale;
    batch.rul_pred[i] = raw(i, kNumClassHeads);
  }
  return batch;
}

std::string forest_to_json(const ForestModel& model, double label_scale,
                           const std::string& schema_hash) {
  detail::Json doc;
  doc["kind"] = "forest";
  doc["schema_hash"] = schema_hash;
  doc["variant"] = std::string(to_string(model.config.variant));
  doc["n_estimators"] = model.config.n_estimators;
  doc["max_depth"] = model.config.max_depth;
  doc["min_samples_leaf"] = model.config.min_samples_leaf;
  doc["bootstrap"] = model.config.uses_bootstrap();
  doc["seed"] = model.config.seed;
  doc["label_scale"] = label_scale;
  doc["n_features"] = model.n_features;
  auto trees = detail::Json::array();
  for (const auto& tree : model.trees) {
    auto nodes = detail::Json::array();
    for (const auto& node : tree.nodes) {
      // [feature, threshold, left, right, value...]
      detail::Json row = detail::Json::array({node.feature, node.threshold, node.left, node.right});
      for (const double v : node.value) row.push_back(v);
      nodes.push_back(std::move(row));
    }
    trees.push_back(std::move(nodes));
  }
  doc["trees"] = std::move(trees);
  return doc.dump() + "\n";
}

ForestArtifact forest_from_json(std::string_view text) {
  const auto doc = detail::parse_json(text, "forest model");
  ForestArtifact art;
  try {
    if (doc.at("kind") != "forest") throw DataError("model file is not a forest model");
    art.schema_hash = doc.at("schema_hash").get<std::string>();
    auto& cfg = art.model.config;
    cfg.variant = parse_forest_variant(doc.at("variant").get<std::string>());
    cfg.n_estimators = doc.at("n_estimators").get<int>();
    cfg.max_depth = doc.at("max_depth").get<int>();
    cfg.min_samples_leaf = doc.at("min_samples_leaf").get<int>();
    cfg.bootstrap = doc.at("bootstrap").get<bool>();
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    art.label_scale = doc.at("label_scale").get<double>();
    art.model.n_features = doc.at("n_features").get<std::size_t>();
    for (const auto& nodes : doc.at("trees")) {
      RegressionTree tree;
      for (const auto& row : nodes) {
        if (row.size() != 4 + kNumOutputs) throw DataError("forest model: malformed node");
        TreeNode node;
        node.feature = row[0].get<int>();
        node.threshold = row[1].get<double>();
        node.left = row[2].get<int>();
        node.right = row[3].get<int>();
        for (std::size_t k = 0; k < kNumOutputs; ++k) node.value[k] = row[4 + k].get<double>();
        tree.nodes.push_back(node);
      }
      const auto size = static_cast<int>(tree.nodes.size());
      for (const auto& node : tree.nodes) {
        if (!node.is_leaf() && (node.left <= 0 || node.left >= size || node.right <= 0 ||
                                node.right >= size ||
                                node.feature >= static_cast<int>(art.model.n_features))) {
          throw DataError("forest model: node references out of range");
        }
      }
      if (tree.nodes.empty()) throw DataError("forest model: empty tree");
      art.model.trees.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("forest model: ") + e.what());
  }
  return art;
}

}  // namespace prognos

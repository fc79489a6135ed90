#include "prognos/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prognos/errors.hpp"

namespace prognos {
namespace {

void check_rul_args(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.empty()) throw DataError(std::string(what) + ": empty input");
  if (a.size() != b.size()) {
    throw DataError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  }
}

void check_batches(const LabelBatch& labels, const PredictionBatch& preds) {
  check_rul_args(labels.rul, preds.rul_pred, "composite loss");
  if (labels.classes.rows() != preds.class_probs.rows() ||
      labels.classes.cols() != preds.class_probs.cols() ||
      labels.classes.rows() != labels.rul.size()) {
    throw DataError("composite loss: label/prediction shape mismatch");
  }
}

double alpha_for(double truth, double pred, const LossConfig& config) {
  return pred > truth ? config.alpha_over : config.alpha_under;
}

}  // namespace

void validate(const LossConfig& config) {
  if (!(config.alpha_under > 0.0) || !(config.alpha_over > config.alpha_under)) {
    throw ConfigError("loss: require alpha_over > alpha_under > 0");
  }
  if (!(config.gamma >= 0.0)) throw ConfigError("loss: gamma must be nonnegative");
}

LabelBatch make_label_batch(std::span<const LabelVector> labels) {
  LabelBatch batch;
  batch.classes = Matrix(labels.size(), kNumClassHeads);
  batch.rul.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto bits = labels[i].class_bits();
    std::copy(bits.begin(), bits.end(), batch.classes.row(i).begin());
    batch.rul.push_back(labels[i].rul);
  }
  return batch;
}

double sc_score(std::span<const double> rul_true, std::span<const double> rul_pred,
                const LossConfig& config) {
  check_rul_args(rul_true, rul_pred, "sc_score");
  double sum = 0.0;
  for (std::size_t i = 0; i < rul_true.size(); ++i) {
    const double alpha = alpha_for(rul_true[i], rul_pred[i], config);
    sum += std::exp(alpha * std::abs(rul_true[i] - rul_pred[i]));
  }
  return sum / static_cast<double>(rul_true.size()) - 1.0;
}

double rmse(std::span<const double> rul_true, std::span<const double> rul_pred) {
  check_rul_args(rul_true, rul_pred, "rmse");
  double sum = 0.0;
  for (std::size_t i = 0; i < rul_true.size(); ++i) {
    const double d = rul_pred[i] - rul_true[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(rul_true.size()));
}

double nasa_score(std::span<const double> rul_true, std::span<const double> rul_pred,
                  const LossConfig& config) {
  return 0.5 * rmse(rul_true, rul_pred) + 0.5 * sc_score(rul_true, rul_pred, config);
}

double bce(const Matrix& class_true, const Matrix& class_probs, const LossConfig& config) {
  if (class_true.rows() != class_probs.rows() || class_true.cols() != class_probs.cols()) {
    throw DataError("bce: shape mismatch");
  }
  if (class_true.empty()) throw DataError("bce: empty input");
  const double eps = config.prob_clamp;
  double sum = 0.0;
  const auto& y = class_true.data();
  const auto& p = class_probs.data();
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double pc = std::clamp(p[k], eps, 1.0 - eps);
    sum += y[k] * std::log(pc) + (1.0 - y[k]) * std::log(1.0 - pc);
  }
  return -sum / static_cast<double>(y.size());
}

double composite_loss(const LabelBatch& labels, const PredictionBatch& preds,
                      const LossConfig& config) {
  check_batches(labels, preds);
  return nasa_score(labels.rul, preds.rul_pred, config) +
         config.gamma * bce(labels.classes, preds.class_probs, config);
}

LossGradient composite_loss_grad(const LabelBatch& labels, const PredictionBatch& preds,
                                 const LossConfig& config) {
  check_batches(labels, preds);
  const std::size_t n = labels.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double root_mse = rmse(labels.rul, preds.rul_pred);

  LossGradient grad;
  grad.d_rul_pred.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = preds.rul_pred[i] - labels.rul[i];
    double g = 0.0;
    if (root_mse > config.rmse_guard) g += 0.5 * diff * inv_n / root_mse;
    if (diff != 0.0) {
      const double alpha = alpha_for(labels.rul[i], preds.rul_pred[i], config);
      const double u = alpha * std::abs(diff);
      g += 0.5 * inv_n * std::exp(u) * alpha * (diff > 0.0 ? 1.0 : -1.0);
    }
    grad.d_rul_pred[i] = g;
  }

  const double eps = config.prob_clamp;
  const double scale = config.gamma / static_cast<double>(labels.classes.size());
  grad.d_class_probs = Matrix(n, labels.classes.cols());
  const auto& y = labels.classes.data();
  const auto& p = preds.class_probs.data();
  auto& out = grad.d_class_probs.data();
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double pc = std::clamp(p[k], eps, 1.0 - eps);
    out[k] = scale * (pc - y[k]) / (pc * (1.0 - pc));
  }
  return grad;
}

}  // namespace prognos

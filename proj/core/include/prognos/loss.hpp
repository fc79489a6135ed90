#pragma once

// Composite training objective: the asymmetric NASA RUL score plus a weighted
// binary cross-entropy over the six classification heads, with its analytic
// gradient. Reductions are plain left-to-right sums, so results are
// reproducible bit-for-bit.

#include <span>
#include <vector>

#include "prognos/matrix.hpp"
#include "prognos/types.hpp"

namespace prognos {

struct LossConfig {
  double gamma = 10.0;
  double alpha_under = 1.0 / 13.0;
  double alpha_over = 1.0 / 10.0;
  double prob_clamp = 1e-12;
  double rmse_guard = 1e-12;
};

// Throws ConfigError unless alpha_over > alpha_under > 0 and gamma >= 0.
void validate(const LossConfig& config);

// Class scores in head order [hs, fan, lpc, hpc, hpt, lpt] and RUL.
struct PredictionBatch {
  Matrix class_probs;  // n x 6
  std::vector<double> rul_pred;

  std::size_t size() const { return rul_pred.size(); }
};

// Ground truth in the same layout as PredictionBatch.
struct LabelBatch {
  Matrix classes;  // n x 6, entries 0/1
  std::vector<double> rul;

  std::size_t size() const { return rul.size(); }
};

LabelBatch make_label_batch(std::span<const LabelVector> labels);

// (1/n) sum exp(alpha_i |d_i|) - 1, alpha_i = alpha_over when pred > true
// (strict), alpha_under otherwise.
double sc_score(std::span<const double> rul_true, std::span<const double> rul_pred,
                const LossConfig& config = {});
double rmse(std::span<const double> rul_true, std::span<const double> rul_pred);
// 0.5 * rmse + 0.5 * sc_score.
double nasa_score(std::span<const double> rul_true, std::span<const double> rul_pred,
                  const LossConfig& config = {});
// Mean over all n*6 entries; probabilities clamped to [eps, 1 - eps].
double bce(const Matrix& class_true, const Matrix& class_probs, const LossConfig& config = {});
// nasa_score + gamma * bce.
double composite_loss(const LabelBatch& labels, const PredictionBatch& preds,
                      const LossConfig& config = {});

struct LossGradient {
  Matrix d_class_probs;  // n x 6
  std::vector<double> d_rul_pred;
};

// Analytic gradient of composite_loss. The exponential term uses subgradient
// 0 at zero error and the RMSE term contributes 0 when rmse <= rmse_guard.
LossGradient composite_loss_grad(const LabelBatch& labels, const PredictionBatch& preds,
                                 const LossConfig& config = {});

}  // namespace prognos

#pragma once

// Multi-head MLP p -> 64 -> 32 -> 7 with ReLU hidden layers, trained
// full-batch with Adam either on the composite loss (sigmoid class heads) or
// on plain MSE against labels whose class bits are scaled by label_scale.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prognos/loss.hpp"
#include "prognos/matrix.hpp"
#include "prognos/types.hpp"

namespace prognos {

inline constexpr std::size_t kHidden1 = 64;
inline constexpr std::size_t kHidden2 = 32;

enum class LossKind { kComposite, kMse };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);

// Weights are stored (fan_out x fan_in). Output head order is
// [hs, fan, lpc, hpc, hpt, lpt, RUL].
struct ModelParams {
  Matrix w1;  // 64 x p
  std::vector<double> b1;
  Matrix w2;  // 32 x 64
  std::vector<double> b2;
  Matrix w3;  // 7 x 32
  std::vector<double> b3;

  std::size_t input_width() const { return w1.cols(); }
  std::size_t parameter_count() const;

  // Views over the six tensors in the order w1, b1, w2, b2, w3, b3.
  std::array<std::span<double>, 6> tensors();
  std::array<std::span<const double>, 6> tensors() const;

  // Zero-valued parameters with the same shapes.
  ModelParams zeros_like() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// p*64 + 64 + 64*32 + 32 + 32*7 + 7.
constexpr std::size_t parameter_count_for(std::size_t p) {
  return p * kHidden1 + kHidden1 + kHidden1 * kHidden2 + kHidden2 + kHidden2 * kNumOutputs +
         kNumOutputs;
}

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int epochs = 5000;
  AdamConfig adam;
  LossKind loss = LossKind::kComposite;
  LossConfig loss_config;  // composite only
  double label_scale = 100.0;  // mse only
  std::uint64_t seed = 0;
  bool rul_rectify = false;
};

// Throws ConfigError for epochs < 1, label_scale <= 0 or a bad loss config.
void validate(const TrainConfig& config);

// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
ModelParams init_network(std::size_t p, std::uint64_t seed);

// Raw network pass. Composite: sigmoid on the six class heads, identity on
// RUL. MSE: identity on all seven heads. Throws NumericError on non-finite
// outputs and DataError on a width mismatch.
PredictionBatch forward(const ModelParams& params, const Matrix& x, LossKind kind);

struct LossAndGradient {
  double loss = 0.0;
  ModelParams grad;
};

// Full-batch training loss and its backpropagated gradient.
LossAndGradient loss_and_gradient(const ModelParams& params, const Matrix& x,
                                  const LabelBatch& labels, const TrainConfig& config);

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_history;  // pre-step loss of every epoch
};

// Throws NumericError (carrying the epoch) if the loss becomes non-finite.
TrainResult train(const Matrix& x, std::span<const LabelVector> labels,
                  const TrainConfig& config);

// forward() followed by optional RUL rectification and, in MSE mode,
// division of the class scores by label_scale.
PredictionBatch predict(const ModelParams& params, const Matrix& x, const TrainConfig& config);

std::string ann_to_json(const ModelParams& params, const TrainConfig& config,
                        const std::string& schema_hash);

struct AnnArtifact {
  ModelParams params;
  TrainConfig config;
  std::string schema_hash;
};
AnnArtifact ann_from_json(std::string_view text);

}  // namespace prognos

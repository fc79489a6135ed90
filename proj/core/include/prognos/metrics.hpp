#pragma once

// Threshold-free classification metrics and RUL regression metrics: the cells
// of one results-table column for one model.

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prognos/loss.hpp"
#include "prognos/types.hpp"

namespace prognos {

// Mann-Whitney AUROC: share of (positive, negative) pairs ranked correctly,
// ties counting 1/2. nullopt unless both classes are present.
std::optional<double> auroc(std::span<const int> labels, std::span<const double> scores);

// Average precision: sum over distinct score thresholds (descending, ties
// grouped) of recall increment times precision. nullopt without positives.
std::optional<double> aupr(std::span<const int> labels, std::span<const double> scores);

struct MaeResult {
  double mae_cycles = 0.0;
  double mae_pct = 0.0;  // mean of 100 * |error| / t_eol
};

MaeResult mae_and_pct(std::span<const double> rul_true, std::span<const double> rul_pred,
                      std::span<const double> t_eol);

struct HeadMetrics {
  std::optional<double> auroc;
  std::optional<double> aupr;
  std::size_t positives = 0;
};

struct MetricsReport {
  std::string model_name;
  std::size_t n = 0;
  std::array<HeadMetrics, kNumClassHeads> heads;
  double rmse = 0.0;
  double nasa = 0.0;
  double mae_cycles = 0.0;
  double mae_pct = 0.0;
  double mean_error = 0.0;  // mean(pred - true); positive = overestimation

  bool has_undefined() const;
};

MetricsReport evaluate(std::span<const LabelVector> labels, const PredictionBatch& preds,
                       std::span<const double> t_eol, const LossConfig& config = {});

// Looks up t_eol for each row through the manifest.
MetricsReport evaluate(std::span<const LabelVector> labels, std::span<const RowKey> keys,
                       const PredictionBatch& preds, const Manifest& manifest,
                       const LossConfig& config = {});

std::string metrics_to_json(const MetricsReport& report);

// Results-table layout: one row per (output, metric), value column aligned;
// undefined cells print as "undefined".
std::string metrics_to_text(const MetricsReport& report);

// "unit,cycle,hs_score,fan_score,lpc_score,hpc_score,hpt_score,lpt_score,rul_pred"
struct KeyedPredictions {
  std::vector<RowKey> keys;
  PredictionBatch preds;
};

void write_predictions_csv(std::ostream& out, std::span<const RowKey> keys,
                           const PredictionBatch& preds);
KeyedPredictions read_predictions_csv(std::istream& in);

// Reorders `source` to follow `keys`. Throws DataError when the key sets
// differ.
PredictionBatch align_predictions(const KeyedPredictions& source, std::span<const RowKey> keys);

}  // namespace prognos

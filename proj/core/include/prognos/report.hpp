#pragma once

// Data products behind the result figures: parity table, RUL curve sorted by
// ground truth, and RUL-error box statistics sliced by health state and by
// eventual failing component, plus self-contained SVG rendering.
//
// Errors are always pred - true, so overestimates are positive.

#include <span>
#include <string>
#include <vector>

#include "prognos/loss.hpp"
#include "prognos/metrics.hpp"
#include "prognos/types.hpp"

namespace prognos {

struct ParityRow {
  double rul_true = 0.0;
  double rul_pred = 0.0;
  double residual = 0.0;  // pred - true
};

// Rows in input order.
std::vector<ParityRow> parity_data(std::span<const double> rul_true,
                                   std::span<const double> rul_pred);

struct SortedRulRow {
  std::size_t index = 0;  // position in the input
  double rul_true = 0.0;
  double rul_pred = 0.0;
};

// Rows ordered by ascending true RUL, stable on ties.
std::vector<SortedRulRow> sorted_rul_curve(std::span<const double> rul_true,
                                           std::span<const double> rul_pred);

struct BoxStats {
  std::string label;
  std::size_t n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;   // smallest value >= q1 - 1.5 IQR
  double whisker_high = 0.0;  // largest value <= q3 + 1.5 IQR
  std::vector<double> outliers;  // ascending

  friend bool operator==(const BoxStats&, const BoxStats&) = default;
};

// Tukey box statistics with the same quantile rule as the feature extractor.
// An empty group yields n = 0 and zeroed numbers.
BoxStats box_stats(std::string label, std::span<const double> values);

struct BoxGroups {
  std::vector<BoxStats> groups;
  std::vector<std::string> warnings;
};

// "healthy" (hs = 1) then "unhealthy" (hs = 0). If a class is absent only the
// present group is returned, with a warning.
BoxGroups error_box_by_health(std::span<const LabelVector> labels,
                              std::span<const double> rul_pred);

// One group per component in fan, lpc, hpc, hpt, lpt order; a cycle belongs
// to every component whose eventual-failure bit is set. Empty groups have n = 0.
std::vector<BoxStats> error_box_by_component(std::span<const LabelVector> labels,
                                             std::span<const double> rul_pred);

std::string parity_to_csv(std::span<const ParityRow> rows);
std::string sorted_rul_to_csv(std::span<const SortedRulRow> rows);
std::string boxes_to_csv(std::span<const BoxStats> boxes);

// Deterministic standalone SVG documents. Throw DataError on empty data.
std::string render_parity_svg(std::span<const ParityRow> rows);
std::string render_sorted_rul_svg(std::span<const SortedRulRow> rows);
std::string render_box_svg(std::span<const BoxStats> boxes, const std::string& title);

struct ReportBundle {
  MetricsReport metrics;
  std::vector<ParityRow> parity;
  std::vector<SortedRulRow> sorted_rul;
  BoxGroups by_health;
  std::vector<BoxStats> by_component;
};

ReportBundle build_report(std::span<const LabelVector> labels, const PredictionBatch& preds,
                          MetricsReport metrics);

std::string report_to_json(const ReportBundle& bundle);

}  // namespace prognos

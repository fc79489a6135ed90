#include "prognos/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include "json_util.hpp"
#include "prognos/errors.hpp"
#include "prognos/text_io.hpp"

namespace prognos {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DataError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                    std::to_string(b) + ")");
  }
}

// Indices sorted by descending score (ties by index, which does not matter
// for either metric since ties are grouped).
std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

const char* kPredictionsHeader =
    "unit,cycle,hs_score,fan_score,lpc_score,hpc_score,hpt_score,lpt_score,rul_pred";

}  // namespace

std::optional<double> auroc(std::span<const int> labels, std::span<const double> scores) {
  check_lengths(labels.size(), scores.size(), "auroc");
  const auto order = descending_order(scores);
  double positives = 0.0;
  double negatives = 0.0;
  for (const int l : labels) (l ? positives : negatives) += 1.0;
  if (positives == 0.0 || negatives == 0.0) return std::nullopt;

  // Walk tie groups from the lowest score up, counting negatives below.
  double negatives_below = 0.0;
  double wins = 0.0;
  std::size_t end = order.size();
  while (end > 0) {
    std::size_t begin = end - 1;
    while (begin > 0 && scores[order[begin - 1]] == scores[order[end - 1]]) --begin;
    double group_pos = 0.0;
    double group_neg = 0.0;
    for (std::size_t k = begin; k < end; ++k) (labels[order[k]] ? group_pos : group_neg) += 1.0;
    wins += group_pos * negatives_below + 0.5 * group_pos * group_neg;
    negatives_below += group_neg;
    end = begin;
  }
  return wins / (positives * negatives);
}

std::optional<double> aupr(std::span<const int> labels, std::span<const double> scores) {
  check_lengths(labels.size(), scores.size(), "aupr");
  double positives = 0.0;
  for (const int l : labels) positives += l ? 1.0 : 0.0;
  if (positives == 0.0) return std::nullopt;

  const auto order = descending_order(scores);
  double tp = 0.0;
  double fp = 0.0;
  double area = 0.0;
  std::size_t begin = 0;
  while (begin < order.size()) {
    std::size_t end = begin + 1;
    while (end < order.size() && scores[order[end]] == scores[order[begin]]) ++end;
    double group_tp = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      if (labels[order[k]]) {
        group_tp += 1.0;
      } else {
        fp += 1.0;
      }
    }
    tp += group_tp;
    if (group_tp > 0.0) area += (group_tp / positives) * (tp / (tp + fp));
    begin = end;
  }
  return area;
}

MaeResult mae_and_pct(std::span<const double> rul_true, std::span<const double> rul_pred,
                      std::span<const double> t_eol) {
  check_lengths(rul_true.size(), rul_pred.size(), "mae");
  check_lengths(rul_true.size(), t_eol.size(), "mae");
  if (rul_true.empty()) throw DataError("mae: empty input");
  MaeResult r;
  for (std::size_t i = 0; i < rul_true.size(); ++i) {
    if (!(t_eol[i] > 0.0)) throw DataError("mae: t_eol must be positive");
    const double err = std::abs(rul_pred[i] - rul_true[i]);
    r.mae_cycles += err;
    r.mae_pct += 100.0 * err / t_eol[i];
  }
  const auto n = static_cast<double>(rul_true.size());
  r.mae_cycles /= n;
  r.mae_pct /= n;
  return r;
}

bool MetricsReport::has_undefined() const {
  return std::any_of(heads.begin(), heads.end(),
                     [](const HeadMetrics& h) { return !h.auroc || !h.aupr; });
}

MetricsReport evaluate(std::span<const LabelVector> labels, const PredictionBatch& preds,
                       std::span<const double> t_eol, const LossConfig& config) {
  check_lengths(labels.size(), preds.size(), "evaluate");
  check_lengths(labels.size(), preds.class_probs.rows(), "evaluate");
  const LabelBatch truth = make_label_batch(labels);
  MetricsReport report;
  report.n = labels.size();

  std::vector<int> column_labels(labels.size());
  std::vector<double> column_scores(labels.size());
  for (std::size_t h = 0; h < kNumClassHeads; ++h) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      column_labels[i] = truth.classes(i, h) > 0.5 ? 1 : 0;
      column_scores[i] = preds.class_probs(i, h);
    }
    auto& head = report.heads[h];
    head.positives = static_cast<std::size_t>(
        std::count(column_labels.begin(), column_labels.end(), 1));
    head.auroc = auroc(column_labels, column_scores);
    head.aupr = aupr(column_labels, column_scores);
  }

  report.rmse = rmse(truth.rul, preds.rul_pred);
  report.nasa = nasa_score(truth.rul, preds.rul_pred, config);
  const MaeResult mae = mae_and_pct(truth.rul, preds.rul_pred, t_eol);
  report.mae_cycles = mae.mae_cycles;
  report.mae_pct = mae.mae_pct;
  double bias = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) bias += preds.rul_pred[i] - truth.rul[i];
  report.mean_error = bias / static_cast<double>(labels.size());
  return report;
}

MetricsReport evaluate(std::span<const LabelVector> labels, std::span<const RowKey> keys,
                       const PredictionBatch& preds, const Manifest& manifest,
                       const LossConfig& config) {
  check_lengths(labels.size(), keys.size(), "evaluate");
  std::vector<double> t_eol;
  t_eol.reserve(keys.size());
  for (const auto& key : keys) {
    const auto* entry = manifest.find(key.unit_id);
    if (entry == nullptr) {
      throw DataError("evaluate: unit " + std::to_string(key.unit_id) + " not in manifest");
    }
    t_eol.push_back(entry->t_eol);
  }
  return evaluate(labels, preds, t_eol, config);
}

std::string metrics_to_json(const MetricsReport& report) {
  detail::Json doc;
  doc["model"] = report.model_name;
  doc["n"] = report.n;
  detail::Json heads;
  for (std::size_t h = 0; h < kNumClassHeads; ++h) {
    const auto& head = report.heads[h];
    detail::Json node;
    node["auroc"] = head.auroc ? detail::Json(*head.auroc) : detail::Json("undefined");
    node["aupr"] = head.aupr ? detail::Json(*head.aupr) : detail::Json("undefined");
    node["positives"] = head.positives;
    heads[std::string(kClassHeadNames[h])] = node;
  }
  doc["classification"] = heads;
  doc["rul"] = {{"rmse", report.rmse},
                {"nasa", report.nasa},
                {"mae_cycles", report.mae_cycles},
                {"mae_pct", report.mae_pct},
                {"mean_error", report.mean_error}};
  return doc.dump(2) + "\n";
}

std::string metrics_to_text(const MetricsReport& report) {
  static constexpr std::array<const char*, kNumClassHeads> kOutputs = {
      "Health State", "Fan Failure", "LPC Failure", "HPC Failure", "HPT Failure", "LPT Failure"};
  const auto cell = [](const std::optional<double>& v) {
    return v ? format_fixed(*v, 2) : std::string("undefined");
  };
  std::string out;
  char line[160];
  const std::string model = report.model_name.empty() ? "model" : report.model_name;
  std::snprintf(line, sizeof(line), "%-14s %-18s %12s\n", "Output", "Validation Metric",
                model.c_str());
  out += line;
  for (std::size_t h = 0; h < kNumClassHeads; ++h) {
    std::snprintf(line, sizeof(line), "%-14s %-18s %12s\n", kOutputs[h], "AUROC",
                  cell(report.heads[h].auroc).c_str());
    out += line;
    std::snprintf(line, sizeof(line), "%-14s %-18s %12s\n", "", "AUPR",
                  cell(report.heads[h].aupr).c_str());
    out += line;
  }
  const std::array<std::pair<const char*, double>, 4> rul = {{{"RMSE", report.rmse},
                                                               {"NASA", report.nasa},
                                                               {"MAE (cycles)", report.mae_cycles},
                                                               {"MAE (%)", report.mae_pct}}};
  for (std::size_t k = 0; k < rul.size(); ++k) {
    std::snprintf(line, sizeof(line), "%-14s %-18s %12s\n", k == 0 ? "RUL" : "", rul[k].first,
                  format_fixed(rul[k].second, 2).c_str());
    out += line;
  }
  return out;
}

void write_predictions_csv(std::ostream& out, std::span<const RowKey> keys,
                           const PredictionBatch& preds) {
  out << kPredictionsHeader << '\n';
  std::string line;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    line = std::to_string(keys[i].unit_id) + ',' + std::to_string(keys[i].cycle_number);
    for (std::size_t h = 0; h < kNumClassHeads; ++h) {
      line += ',';
      line += format_double(preds.class_probs(i, h));
    }
    line += ',';
    line += format_double(preds.rul_pred[i]);
    line += '\n';
    out << line;
  }
}

KeyedPredictions read_predictions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("predictions: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPredictionsHeader) {
    throw DataError(std::string("predictions: header must be '") + kPredictionsHeader + "'");
  }
  KeyedPredictions kp;
  std::vector<double> scores;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2 + kNumOutputs) {
      throw DataError("predictions line " + std::to_string(line_no) + ": wrong field count");
    }
    std::int64_t unit = 0;
    std::int64_t cycle = 0;
    if (!parse_int(fields[0], unit) || !parse_int(fields[1], cycle)) {
      throw DataError("predictions line " + std::to_string(line_no) + ": bad unit/cycle");
    }
    kp.keys.push_back(RowKey{static_cast<int>(unit), static_cast<int>(cycle)});
    for (std::size_t k = 2; k < fields.size(); ++k) {
      double v = 0.0;
      if (!parse_double(fields[k], v) || !std::isfinite(v)) {
        throw DataError("predictions line " + std::to_string(line_no) + ": bad number '" +
                        std::string(fields[k]) + "'");
      }
      if (k + 1 == fields.size()) {
        kp.preds.rul_pred.push_back(v);
      } else {
        scores.push_back(v);
      }
    }
  }
  kp.preds.class_probs = Matrix(kp.keys.size(), kNumClassHeads);
  kp.preds.class_probs.data() = std::move(scores);
  return kp;
}

PredictionBatch align_predictions(const KeyedPredictions& source, std::span<const RowKey> keys) {
  std::map<RowKey, std::size_t> index;
  for (std::size_t i = 0; i < source.keys.size(); ++i) {
    if (!index.emplace(source.keys[i], i).second) {
      throw DataError("predictions: duplicate row for unit " +
                      std::to_string(source.keys[i].unit_id) + " cycle " +
                      std::to_string(source.keys[i].cycle_number));
    }
  }
  if (index.size() != keys.size()) {
    throw DataError("predictions: " + std::to_string(index.size()) + " rows for " +
                    std::to_string(keys.size()) + " labelled cycles");
  }
  PredictionBatch out;
  out.class_probs = Matrix(keys.size(), kNumClassHeads);
  out.rul_pred.resize(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto it = index.find(keys[i]);
    if (it == index.end()) {
      throw DataError("predictions: missing unit " + std::to_string(keys[i].unit_id) +
                      " cycle " + std::to_string(keys[i].cycle_number));
    }
    const auto src = source.preds.class_probs.row(it->second);
    std::copy(src.begin(), src.end(), out.class_probs.row(i).begin());
    out.rul_pred[i] = source.preds.rul_pred[it->second];
  }
  return out;
}

}  // namespace prognos

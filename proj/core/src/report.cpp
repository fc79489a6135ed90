#include "prognos/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_util.hpp"
#include "prognos/errors.hpp"
#include "prognos/features.hpp"
#include "prognos/text_io.hpp"

namespace prognos {
namespace {

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DataError(std::string(what) + ": inputs are not aligned");
}

// Plot frame shared by all figures.
struct Frame {
  static constexpr double kWidth = 640.0;
  static constexpr double kHeight = 480.0;
  static constexpr double kLeft = 72.0;
  static constexpr double kRight = 24.0;
  static constexpr double kTop = 44.0;
  static constexpr double kBottom = 60.0;

  double x_lo, x_hi, y_lo, y_hi;

  double px(double x) const {
    return kLeft + (x - x_lo) / (x_hi - x_lo) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y - y_lo) / (y_hi - y_lo) * (kHeight - kTop - kBottom);
  }
};

std::string num(double v) { return format_fixed(v, 2); }

double nice_step(double range, int target_ticks) {
  const double raw = range / target_ticks;
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  const double fraction = raw / magnitude;
  const double nice = fraction <= 1.0 ? 1.0 : fraction <= 2.0 ? 2.0 : fraction <= 5.0 ? 5.0 : 10.0;
  return nice * magnitude;
}

// Expands [lo, hi] to tick-aligned bounds; returns the tick step.
double nice_bounds(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double step = nice_step(hi - lo, 5);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;
  return step;
}

int tick_decimals(double step) {
  return step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step)));
}

std::string svg_open(const std::string& title) {
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(Frame::kWidth) +
       "\" height=\"" + num(Frame::kHeight) + "\" viewBox=\"0 0 " + num(Frame::kWidth) + " " +
       num(Frame::kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(Frame::kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       title + "</text>\n";
  return s;
}

std::string axes(const Frame& f, double x_step, double y_step, const std::string& x_label,
                 const std::string& y_label, bool x_ticks = true) {
  std::string s;
  const double x0 = f.px(f.x_lo);
  const double x1 = f.px(f.x_hi);
  const double y0 = f.py(f.y_lo);
  const double y1 = f.py(f.y_hi);
  s += "<g stroke=\"black\" fill=\"none\">\n";
  s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) + "\"/>\n";
  s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) + "\"/>\n";
  s += "</g>\n";
  if (x_ticks) {
    const int decimals = tick_decimals(x_step);
    const int count = static_cast<int>(std::llround((f.x_hi - f.x_lo) / x_step));
    for (int k = 0; k <= count; ++k) {
      const double v = f.x_lo + k * x_step;
      const double x = f.px(v);
      s += "<line x1=\"" + num(x) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(y0 + 5) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + num(x) + "\" y=\"" + num(y0 + 18) + "\" text-anchor=\"middle\">" +
           format_fixed(v, decimals) + "</text>\n";
    }
  }
  const int y_decimals = tick_decimals(y_step);
  const int y_count = static_cast<int>(std::llround((f.y_hi - f.y_lo) / y_step));
  for (int k = 0; k <= y_count; ++k) {
    const double v = f.y_lo + k * y_step;
    const double y = f.py(v);
    s += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x0) + "\" y2=\"" +
         num(y) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
         format_fixed(v, y_decimals) + "</text>\n";
  }
  s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(Frame::kHeight - 16) +
       "\" text-anchor=\"middle\">" + x_label + "</text>\n";
  s += "<text x=\"18\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       num((y0 + y1) / 2) + ")\">" + y_label + "</text>\n";
  return s;
}

detail::Json box_json(const BoxStats& b) {
  detail::Json node;
  node["label"] = b.label;
  node["n"] = b.n;
  node["median"] = b.median;
  node["q1"] = b.q1;
  node["q3"] = b.q3;
  node["whisker_low"] = b.whisker_low;
  node["whisker_high"] = b.whisker_high;
  node["outliers"] = b.outliers;
  return node;
}

}  // namespace

std::vector<ParityRow> parity_data(std::span<const double> rul_true,
                                   std::span<const double> rul_pred) {
  check_aligned(rul_true.size(), rul_pred.size(), "parity_data");
  std::vector<ParityRow> rows(rul_true.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = {rul_true[i], rul_pred[i], rul_pred[i] - rul_true[i]};
  }
  return rows;
}

std::vector<SortedRulRow> sorted_rul_curve(std::span<const double> rul_true,
                                           std::span<const double> rul_pred) {
  check_aligned(rul_true.size(), rul_pred.size(), "sorted_rul_curve");
  std::vector<std::size_t> order(rul_true.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rul_true[a] < rul_true[b]; });
  std::vector<SortedRulRow> rows;
  rows.reserve(order.size());
  for (const auto i : order) rows.push_back({i, rul_true[i], rul_pred[i]});
  return rows;
}

BoxStats box_stats(std::string label, std::span<const double> values) {
  BoxStats box;
  box.label = std::move(label);
  box.n = values.size();
  if (values.empty()) return box;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  box.q1 = quantile_sorted(sorted, 0.25);
  box.median = quantile_sorted(sorted, 0.5);
  box.q3 = quantile_sorted(sorted, 0.75);
  const double iqr = box.q3 - box.q1;
  const double low_fence = box.q1 - 1.5 * iqr;
  const double high_fence = box.q3 + 1.5 * iqr;
  box.whisker_low = box.q1;
  box.whisker_high = box.q3;
  for (const double v : sorted) {
    if (v < low_fence || v > high_fence) {
      box.outliers.push_back(v);
      continue;
    }
    box.whisker_low = std::min(box.whisker_low, v);
    box.whisker_high = std::max(box.whisker_high, v);
  }
  return box;
}

BoxGroups error_box_by_health(std::span<const LabelVector> labels,
                              std::span<const double> rul_pred) {
  check_aligned(labels.size(), rul_pred.size(), "error_box_by_health");
  std::vector<double> healthy;
  std::vector<double> unhealthy;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double err = rul_pred[i] - labels[i].rul;
    (labels[i].hs == 1 ? healthy : unhealthy).push_back(err);
  }
  BoxGroups out;
  if (!healthy.empty()) out.groups.push_back(box_stats("healthy", healthy));
  if (!unhealthy.empty()) out.groups.push_back(box_stats("unhealthy", unhealthy));
  if (healthy.empty()) out.warnings.emplace_back("no healthy cycles; health box plot has one group");
  if (unhealthy.empty()) {
    out.warnings.emplace_back("no unhealthy cycles; health box plot has one group");
  }
  return out;
}

std::vector<BoxStats> error_box_by_component(std::span<const LabelVector> labels,
                                             std::span<const double> rul_pred) {
  check_aligned(labels.size(), rul_pred.size(), "error_box_by_component");
  std::array<std::vector<double>, kNumComponents> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double err = rul_pred[i] - labels[i].rul;
    for (std::size_t c = 0; c < kNumComponents; ++c) {
      if (labels[i].ef.at(c)) members[c].push_back(err);
    }
  }
  std::vector<BoxStats> boxes;
  for (std::size_t c = 0; c < kNumComponents; ++c) {
    boxes.push_back(box_stats(std::string(kComponentNames[c]), members[c]));
  }
  return boxes;
}

std::string parity_to_csv(std::span<const ParityRow> rows) {
  std::string out = "rul_true,rul_pred,residual\n";
  for (const auto& r : rows) {
    out += format_double(r.rul_true) + ',' + format_double(r.rul_pred) + ',' +
           format_double(r.residual) + '\n';
  }
  return out;
}

std::string sorted_rul_to_csv(std::span<const SortedRulRow> rows) {
  std::string out = "rank,index,rul_true,rul_pred\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out += std::to_string(k) + ',' + std::to_string(rows[k].index) + ',' +
           format_double(rows[k].rul_true) + ',' + format_double(rows[k].rul_pred) + '\n';
  }
  return out;
}

std::string boxes_to_csv(std::span<const BoxStats> boxes) {
  std::string out = "group,n,whisker_low,q1,median,q3,whisker_high,outliers\n";
  for (const auto& b : boxes) {
    std::string outliers;
    for (std::size_t k = 0; k < b.outliers.size(); ++k) {
      if (k) outliers += ' ';
      outliers += format_double(b.outliers[k]);
    }
    out += b.label + ',' + std::to_string(b.n) + ',' + format_double(b.whisker_low) + ',' +
           format_double(b.q1) + ',' + format_double(b.median) + ',' + format_double(b.q3) +
           ',' + format_double(b.whisker_high) + ',' + outliers + '\n';
  }
  return out;
}

std::string render_parity_svg(std::span<const ParityRow> rows) {
  if (rows.empty()) throw DataError("render_parity_svg: no data");
  double lo = rows[0].rul_true;
  double hi = lo;
  for (const auto& r : rows) {
    lo = std::min({lo, r.rul_true, r.rul_pred});
    hi = std::max({hi, r.rul_true, r.rul_pred});
  }
  const double step = nice_bounds(lo, hi);
  const Frame f{lo, hi, lo, hi};
  std::string s = svg_open("Parity: predicted vs actual RUL");
  s += axes(f, step, step, "Actual RUL (cycles)", "Predicted RUL (cycles)");
  s += "<line class=\"reference\" x1=\"" + num(f.px(lo)) + "\" y1=\"" + num(f.py(lo)) + "\" x2=\"" +
       num(f.px(hi)) + "\" y2=\"" + num(f.py(hi)) +
       "\" stroke=\"#d62728\" stroke-dasharray=\"6 4\"/>\n";
  s += "<g fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
  for (const auto& r : rows) {
    s += "<circle cx=\"" + num(f.px(r.rul_true)) + "\" cy=\"" + num(f.py(r.rul_pred)) + "\" r=\"2\"/>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

std::string render_sorted_rul_svg(std::span<const SortedRulRow> rows) {
  if (rows.empty()) throw DataError("render_sorted_rul_svg: no data");
  double lo = rows[0].rul_true;
  double hi = lo;
  for (const auto& r : rows) {
    lo = std::min({lo, r.rul_true, r.rul_pred});
    hi = std::max({hi, r.rul_true, r.rul_pred});
  }
  const double y_step = nice_bounds(lo, hi);
  double x_lo = 0.0;
  double x_hi = static_cast<double>(rows.size() - 1);
  const double x_step = nice_bounds(x_lo, x_hi);
  const Frame f{x_lo, x_hi, lo, hi};
  std::string s = svg_open("Predictions against sorted ground-truth RUL");
  s += axes(f, x_step, y_step, "Test cycle (sorted by actual RUL)", "RUL (cycles)");
  s += "<g fill=\"#1f77b4\" fill-opacity=\"0.5\">\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    s += "<circle cx=\"" + num(f.px(static_cast<double>(k))) + "\" cy=\"" +
         num(f.py(rows[k].rul_pred)) + "\" r=\"2\"/>\n";
  }
  s += "</g>\n<polyline class=\"truth\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k) s += ' ';
    s += num(f.px(static_cast<double>(k))) + ',' + num(f.py(rows[k].rul_true));
  }
  s += "\"/>\n</svg>\n";
  return s;
}

std::string render_box_svg(std::span<const BoxStats> boxes, const std::string& title) {
  if (boxes.empty()) throw DataError("render_box_svg: no groups");
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (const auto& b : boxes) {
    if (b.n == 0) continue;
    const double b_lo = b.outliers.empty() ? b.whisker_low : std::min(b.whisker_low, b.outliers.front());
    const double b_hi = b.outliers.empty() ? b.whisker_high : std::max(b.whisker_high, b.outliers.back());
    lo = any ? std::min(lo, b_lo) : b_lo;
    hi = any ? std::max(hi, b_hi) : b_hi;
    any = true;
  }
  const double y_step = nice_bounds(lo, hi);
  const double groups = static_cast<double>(boxes.size());
  const Frame f{0.0, groups, lo, hi};
  std::string s = svg_open(title);
  s += axes(f, 1.0, y_step, "Group", "RUL error, predicted - actual (cycles)", false);
  const double slot = f.px(1.0) - f.px(0.0);
  const double half = std::min(40.0, slot * 0.3);
  for (std::size_t g = 0; g < boxes.size(); ++g) {
    const BoxStats& b = boxes[g];
    const double cx = f.px(static_cast<double>(g) + 0.5);
    s += "<g class=\"box\" data-group=\"" + b.label + "\">\n";
    s += "<text x=\"" + num(cx) + "\" y=\"" + num(f.py(f.y_lo) + 18) + "\" text-anchor=\"middle\">" +
         b.label + " (n=" + std::to_string(b.n) + ")</text>\n";
    if (b.n > 0) {
      s += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.py(b.whisker_low)) + "\" x2=\"" + num(cx) +
           "\" y2=\"" + num(f.py(b.q1)) + "\" stroke=\"black\"/>\n";
      s += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.py(b.q3)) + "\" x2=\"" + num(cx) +
           "\" y2=\"" + num(f.py(b.whisker_high)) + "\" stroke=\"black\"/>\n";
      for (const double w : {b.whisker_low, b.whisker_high}) {
        s += "<line x1=\"" + num(cx - half / 2) + "\" y1=\"" + num(f.py(w)) + "\" x2=\"" +
             num(cx + half / 2) + "\" y2=\"" + num(f.py(w)) + "\" stroke=\"black\"/>\n";
      }
      s += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(f.py(b.q3)) + "\" width=\"" +
           num(2 * half) + "\" height=\"" + num(f.py(b.q1) - f.py(b.q3)) +
           "\" fill=\"#aec7e8\" stroke=\"black\"/>\n";
      s += "<line x1=\"" + num(cx - half) + "\" y1=\"" + num(f.py(b.median)) + "\" x2=\"" +
           num(cx + half) + "\" y2=\"" + num(f.py(b.median)) + "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
      for (const double o : b.outliers) {
        s += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(f.py(o)) +
             "\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>\n";
      }
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

ReportBundle build_report(std::span<const LabelVector> labels, const PredictionBatch& preds,
                          MetricsReport metrics) {
  check_aligned(labels.size(), preds.size(), "build_report");
  std::vector<double> truth(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) truth[i] = labels[i].rul;
  ReportBundle bundle;
  bundle.metrics = std::move(metrics);
  bundle.parity = parity_data(truth, preds.rul_pred);
  bundle.sorted_rul = sorted_rul_curve(truth, preds.rul_pred);
  bundle.by_health = error_box_by_health(labels, preds.rul_pred);
  bundle.by_component = error_box_by_component(labels, preds.rul_pred);
  return bundle;
}

std::string report_to_json(const ReportBundle& bundle) {
  detail::Json doc;
  doc["metrics"] = detail::Json::parse(metrics_to_json(bundle.metrics));
  auto parity = detail::Json::array();
  for (const auto& r : bundle.parity) parity.push_back({r.rul_true, r.rul_pred, r.residual});
  doc["parity"] = {{"columns", {"rul_true", "rul_pred", "residual"}}, {"rows", parity}};
  auto sorted = detail::Json::array();
  for (const auto& r : bundle.sorted_rul) sorted.push_back({r.index, r.rul_true, r.rul_pred});
  doc["sorted_rul"] = {{"columns", {"index", "rul_true", "rul_pred"}}, {"rows", sorted}};
  auto health = detail::Json::array();
  for (const auto& b : bundle.by_health.groups) health.push_back(box_json(b));
  doc["error_by_health"] = health;
  doc["warnings"] = bundle.by_health.warnings;
  auto component = detail::Json::array();
  for (const auto& b : bundle.by_component) component.push_back(box_json(b));
  doc["error_by_component"] = component;
  return doc.dump(1) + "\n";
}

}  // namespace prognos

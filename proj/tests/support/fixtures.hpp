#pragma once

// Small builders shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "prognos/matrix.hpp"
#include "prognos/random.hpp"
#include "prognos/types.hpp"

namespace prognos::test {

// Record whose signal s holds value(s, t) at timestamp t.
template <typename Fn>
CycleRecord make_record(int unit, int cycle, int flight_class, int hs, std::size_t length,
                        Fn value) {
  CycleRecord rec;
  rec.unit_id = unit;
  rec.cycle_number = cycle;
  rec.flight_class = flight_class;
  rec.health_state = hs;
  for (std::size_t s = 0; s < kNumSignals; ++s) {
    rec.series[s].resize(length);
    for (std::size_t t = 0; t < length; ++t) rec.series[s][t] = value(s, t);
  }
  return rec;
}

inline CycleRecord make_record(int unit, int cycle, int flight_class = 1, int hs = 1,
                               std::size_t length = 5) {
  return make_record(unit, cycle, flight_class, hs, length, [&](std::size_t s, std::size_t t) {
    return 100.0 * unit + 10.0 * cycle + static_cast<double>(s) + 0.125 * static_cast<double>(t);
  });
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

// Brute-force O(n^2) AUROC: positive/negative pairs, ties count one half.
inline double brute_auroc(std::span<const int> labels, std::span<const double> scores) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Brute-force average precision: one threshold per distinct score, each
// threshold recomputes precision and recall from scratch.
inline double brute_aupr(std::span<const int> labels, std::span<const double> scores) {
  std::vector<double> thresholds(scores.begin(), scores.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double positives = 0.0;
  for (int y : labels) positives += y;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double th : thresholds) {
    double tp = 0.0;
    double predicted = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (scores[i] >= th) {
        predicted += 1.0;
        tp += labels[i];
      }
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

}  // namespace prognos::test

#pragma once

// Fixed 129-column per-cycle statistical feature vector: for each of the 18
// signals [mean, std, min, q1, median, q3, max], then duration, cycle number
// and flight class.
//
// Quantiles interpolate linearly at index (m - 1) * prob over the sorted
// samples; std uses the population divisor m; duration is the timestamp count.

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prognos/matrix.hpp"
#include "prognos/types.hpp"

namespace prognos {

inline constexpr std::size_t kStatsPerSignal = 7;
inline constexpr std::size_t kExtraFeatures = 3;
inline constexpr std::size_t kNumFeatures = kNumSignals * kStatsPerSignal + kExtraFeatures;

inline constexpr std::array<std::string_view, kStatsPerSignal> kStatNames = {
    "mean", "std", "min", "q1", "median", "q3", "max"};

// Ordered feature names, e.g. "alt_mean", ..., "P50_max", "duration",
// "cycle_number", "flight_class".
const std::vector<std::string>& feature_schema();

// Hash of the ordered schema names; stamped into every fitted artifact.
const std::string& feature_schema_hash();
std::string schema_hash_of(std::span<const std::string> names);

// Linear-interpolation quantile of already sorted, nonempty data.
double quantile_sorted(std::span<const double> sorted, double prob);

struct FeatureMatrix {
  Matrix values;
  std::vector<RowKey> row_keys;
};

std::array<double, kNumFeatures> extract_cycle_features(const CycleRecord& record);

struct LabelledFeatures {
  FeatureMatrix features;
  std::vector<LabelVector> labels;
};

// Row i is the feature vector of samples[i]. Throws DataError on an empty
// input or an invalid cycle (message carries unit and cycle).
LabelledFeatures extract_matrix(std::span<const Sample> samples);

// Cache CSV: "unit,cycle,<schema names>".
void write_feature_cache(std::ostream& out, const FeatureMatrix& matrix);
FeatureMatrix read_feature_cache(std::istream& in);

// Labels CSV kept next to a feature cache: "unit,cycle,hs,fan,lpc,hpc,hpt,lpt,rul".
void write_label_cache(std::ostream& out, std::span<const RowKey> keys,
                       std::span<const LabelVector> labels);
std::vector<LabelVector> read_label_cache(std::istream& in, std::vector<RowKey>* keys = nullptr);

}  // namespace prognos

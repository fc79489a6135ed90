#include "prognos/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "prognos/errors.hpp"
#include "prognos/text_io.hpp"

namespace prognos {
namespace {

void summarize(std::span<const double> values, std::vector<double>& scratch,
               std::span<double> out) {
  const auto m = static_cast<double>(values.size());
  double sum = 0.0;
  for (const double v : values) sum += v;
  const double mean = sum / m;
  double squares = 0.0;
  for (const double v : values) squares += (v - mean) * (v - mean);

  scratch.assign(values.begin(), values.end());
  std::sort(scratch.begin(), scratch.end());

  out[0] = mean;
  out[1] = std::sqrt(squares / m);
  out[2] = scratch.front();
  out[3] = quantile_sorted(scratch, 0.25);
  out[4] = quantile_sorted(scratch, 0.50);
  out[5] = quantile_sorted(scratch, 0.75);
  out[6] = scratch.back();
}

std::string labels_header() {
  std::string header = "unit,cycle";
  for (const auto name : kClassHeadNames) {
    header += ',';
    header += name;
  }
  return header + ",rul";
}

}  // namespace

const std::vector<std::string>& feature_schema() {
  static const std::vector<std::string> schema = [] {
    std::vector<std::string> names;
    names.reserve(kNumFeatures);
    for (const auto signal : kSignalNames) {
      for (const auto stat : kStatNames) {
        names.push_back(std::string(signal) + "_" + std::string(stat));
      }
    }
    names.emplace_back("duration");
    names.emplace_back("cycle_number");
    names.emplace_back("flight_class");
    return names;
  }();
  return schema;
}

std::string schema_hash_of(std::span<const std::string> names) {
  std::string joined;
  for (const auto& name : names) {
    joined += name;
    joined += ',';
  }
  return fnv1a_hex(joined);
}

const std::string& feature_schema_hash() {
  static const std::string hash = schema_hash_of(feature_schema());
  return hash;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  const double position = static_cast<double>(sorted.size() - 1) * prob;
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  const double frac = position - static_cast<double>(lower);
  return sorted[lower] + frac * (sorted[upper] - sorted[lower]);
}

std::array<double, kNumFeatures> extract_cycle_features(const CycleRecord& record) {
  validate(record);
  std::array<double, kNumFeatures> features{};
  std::vector<double> scratch;
  scratch.reserve(record.length());
  for (std::size_t s = 0; s < kNumSignals; ++s) {
    summarize(record.series[s], scratch,
              std::span<double>(features).subspan(s * kStatsPerSignal, kStatsPerSignal));
  }
  constexpr std::size_t extra = kNumSignals * kStatsPerSignal;
  features[extra + 0] = static_cast<double>(record.length());
  features[extra + 1] = record.cycle_number;
  features[extra + 2] = record.flight_class;
  for (const double v : features) {
    if (!std::isfinite(v)) {
      throw DataError("unit " + std::to_string(record.unit_id) + " cycle " +
                      std::to_string(record.cycle_number) + ": non-finite feature");
    }
  }
  return features;
}

LabelledFeatures extract_matrix(std::span<const Sample> samples) {
  if (samples.empty()) throw DataError("feature extraction needs at least one cycle");
  LabelledFeatures out;
  out.features.values = Matrix(samples.size(), kNumFeatures);
  out.features.row_keys.reserve(samples.size());
  out.labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& rec = samples[i].record;
    std::array<double, kNumFeatures> row;
    try {
      row = extract_cycle_features(rec);
    } catch (const DataError& e) {
      throw DataError(std::string("feature extraction failed: ") + e.what());
    }
    std::copy(row.begin(), row.end(), out.features.values.row(i).begin());
    out.features.row_keys.push_back(RowKey{rec.unit_id, rec.cycle_number});
    out.labels.push_back(samples[i].label);
  }
  return out;
}

void write_feature_cache(std::ostream& out, const FeatureMatrix& matrix) {
  out << "unit,cycle";
  for (const auto& name : feature_schema()) out << ',' << name;
  out << '\n';
  std::string line;
  for (std::size_t i = 0; i < matrix.values.rows(); ++i) {
    line = std::to_string(matrix.row_keys[i].unit_id) + ',' +
           std::to_string(matrix.row_keys[i].cycle_number);
    for (const double v : matrix.values.row(i)) {
      line += ',';
      line += format_double(v);
    }
    line += '\n';
    out << line;
  }
}

FeatureMatrix read_feature_cache(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature cache: missing header");
  const auto header = split_csv_line(line);
  const auto& schema = feature_schema();
  bool header_ok = header.size() == schema.size() + 2 && header[0] == "unit" &&
                   header[1] == "cycle";
  for (std::size_t j = 0; header_ok && j < schema.size(); ++j) {
    header_ok = header[j + 2] == schema[j];
  }
  if (!header_ok) {
    throw DataError("feature cache: header does not match the feature schema (hash " +
                    feature_schema_hash() + ")");
  }

  std::vector<double> values;
  std::vector<RowKey> keys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != schema.size() + 2) {
      throw DataError("feature cache line " + std::to_string(line_no) + ": wrong field count");
    }
    std::int64_t unit = 0;
    std::int64_t cycle = 0;
    if (!parse_int(fields[0], unit) || !parse_int(fields[1], cycle)) {
      throw DataError("feature cache line " + std::to_string(line_no) + ": bad row key");
    }
    keys.push_back(RowKey{static_cast<int>(unit), static_cast<int>(cycle)});
    for (std::size_t j = 2; j < fields.size(); ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v) || !std::isfinite(v)) {
        throw DataError("feature cache line " + std::to_string(line_no) + ": bad value in '" +
                        schema[j - 2] + "'");
      }
      values.push_back(v);
    }
  }
  FeatureMatrix matrix;
  matrix.values = Matrix(keys.size(), schema.size());
  matrix.values.data() = std::move(values);
  matrix.row_keys = std::move(keys);
  return matrix;
}

void write_label_cache(std::ostream& out, std::span<const RowKey> keys,
                       std::span<const LabelVector> labels) {
  out << labels_header() << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    out << keys[i].unit_id << ',' << keys[i].cycle_number << ',' << l.hs << ','
        << l.ef.fan << ',' << l.ef.lpc << ',' << l.ef.hpc << ',' << l.ef.hpt << ','
        << l.ef.lpt << ',' << l.rul << '\n';
  }
}

std::vector<LabelVector> read_label_cache(std::istream& in, std::vector<RowKey>* keys) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("label cache: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != labels_header()) throw DataError("label cache: unexpected header");
  std::vector<LabelVector> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    std::array<std::int64_t, 9> v{};
    bool ok = fields.size() == v.size();
    for (std::size_t j = 0; ok && j < v.size(); ++j) ok = parse_int(fields[j], v[j]);
    for (std::size_t j = 2; ok && j < 8; ++j) ok = v[j] == 0 || v[j] == 1;
    if (!ok) throw DataError("label cache line " + std::to_string(line_no) + ": malformed");
    if (keys != nullptr) keys->push_back(RowKey{static_cast<int>(v[0]), static_cast<int>(v[1])});
    LabelVector l;
    l.hs = static_cast<int>(v[2]);
    l.ef = FailureFlags{v[3] == 1, v[4] == 1, v[5] == 1, v[6] == 1, v[7] == 1};
    l.rul = static_cast<int>(v[8]);
    labels.push_back(l);
  }
  return labels;
}

}  // namespace prognos

#include "prognos/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "prognos/errors.hpp"

namespace prognos {

std::size_t signal_index(std::string_view name) {
  const auto it = std::find(kSignalNames.begin(), kSignalNames.end(), name);
  if (it == kSignalNames.end()) {
    throw std::out_of_range("unknown signal '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - kSignalNames.begin());
}

bool FailureFlags::operator[](Component c) const {
  switch (c) {
    case Component::kFan: return fan;
    case Component::kLpc: return lpc;
    case Component::kHpc: return hpc;
    case Component::kHpt: return hpt;
    case Component::kLpt: return lpt;
  }
  throw std::out_of_range("component index");
}

bool& FailureFlags::operator[](Component c) {
  switch (c) {
    case Component::kFan: return fan;
    case Component::kLpc: return lpc;
    case Component::kHpc: return hpc;
    case Component::kHpt: return hpt;
    case Component::kLpt: return lpt;
  }
  throw std::out_of_range("component index");
}

std::string_view to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw DataError("unknown split '" + std::string(text) + "' (expected train|test)");
}

bool is_known_subset(std::string_view subset_name) {
  return std::find(kSubsetNames.begin(), kSubsetNames.end(), subset_name) !=
         kSubsetNames.end();
}

FailureFlags failure_flags_for_subset(std::string_view subset_name) {
  //                                fan    lpc    hpc    hpt    lpt
  if (subset_name == "DS01") return {false, false, false, true, false};
  if (subset_name == "DS03") return {false, false, false, true, true};
  if (subset_name == "DS04") return {true, false, false, false, false};
  if (subset_name == "DS05") return {false, false, true, false, false};
  if (subset_name == "DS06") return {false, true, true, false, false};
  if (subset_name == "DS07") return {false, false, false, false, true};
  if (subset_name == "DS08a" || subset_name == "DS08c") {
    return {true, true, true, true, true};
  }
  throw DataError("unknown subset '" + std::string(subset_name) + "'");
}

void validate(const CycleRecord& record) {
  const auto where = [&] {
    return "unit " + std::to_string(record.unit_id) + " cycle " +
           std::to_string(record.cycle_number) + ": ";
  };
  if (record.unit_id < 1) throw DataError(where() + "unit id must be positive");
  if (record.cycle_number < 1) throw DataError(where() + "cycle number must be positive");
  if (record.flight_class < 1 || record.flight_class > 3) {
    throw DataError(where() + "flight class must be 1, 2 or 3");
  }
  if (record.health_state != 0 && record.health_state != 1) {
    throw DataError(where() + "health state must be 0 or 1");
  }
  const std::size_t length = record.series[0].size();
  if (length == 0) throw DataError(where() + "empty series");
  for (std::size_t s = 0; s < kNumSignals; ++s) {
    if (record.series[s].size() != length) {
      throw DataError(where() + "series '" + std::string(kSignalNames[s]) +
                      "' has a different length");
    }
  }
}

void validate_unit_sequences(std::span<const CycleRecord> records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const CycleRecord& rec = records[i];
    const bool first_of_unit = i == 0 || records[i - 1].unit_id != rec.unit_id;
    const std::string where =
        "unit " + std::to_string(rec.unit_id) + " cycle " + std::to_string(rec.cycle_number);
    if (first_of_unit) {
      if (i > 0 && records[i - 1].unit_id > rec.unit_id) {
        throw DataError(where + ": units out of ascending order");
      }
      if (rec.cycle_number != 1) {
        throw DataError(where + ": first cycle of a unit must be 1");
      }
      continue;
    }
    const CycleRecord& prev = records[i - 1];
    if (rec.cycle_number != prev.cycle_number + 1) {
      throw DataError(where + ": cycle numbers must be contiguous (previous " +
                      std::to_string(prev.cycle_number) + ")");
    }
    if (prev.health_state == 0 && rec.health_state == 1) {
      throw DataError(where + ": health state returns to 1 after degradation");
    }
  }
}

std::array<double, kNumClassHeads> LabelVector::class_bits() const {
  return {static_cast<double>(hs),  static_cast<double>(ef.fan),
          static_cast<double>(ef.lpc), static_cast<double>(ef.hpc),
          static_cast<double>(ef.hpt), static_cast<double>(ef.lpt)};
}

const UnitManifestEntry* Manifest::find(int unit_id) const {
  for (const auto& entry : units) {
    if (entry.unit_id == unit_id) return &entry;
  }
  return nullptr;
}

LabelVector build_label_vector(const CycleRecord& record, const UnitManifestEntry& entry) {
  if (record.unit_id != entry.unit_id) {
    throw DataError("record of unit " + std::to_string(record.unit_id) +
                    " labelled with manifest entry of unit " + std::to_string(entry.unit_id));
  }
  if (record.cycle_number > entry.t_eol) {
    throw DataError("unit " + std::to_string(record.unit_id) + " cycle " +
                    std::to_string(record.cycle_number) + " exceeds t_eol " +
                    std::to_string(entry.t_eol) + " (inconsistent manifest)");
  }
  return LabelVector{record.health_state, entry.failures, entry.t_eol - record.cycle_number};
}

}  // namespace prognos

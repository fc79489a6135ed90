#pragma once

// Canonical telemetry CSV and manifest JSON readers/writers, and routing of
// labelled cycles into the train/test split.

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prognos/types.hpp"

namespace prognos {

// "unit,cycle,Fc,hs,alt,Mach,...,P50": 22 columns, signals in kSignalNames order.
const std::string& canonical_csv_header();

// One CycleRecord per (unit, cycle) group. Rows must be grouped by
// (unit, cycle) in ascending order; within a unit cycles start at 1 and are
// contiguous, and health state never goes from 0 back to 1. Violations throw
// DataError with the offending line number.
std::vector<CycleRecord> parse_canonical_csv(std::istream& in);

void write_canonical_csv(std::ostream& out, std::span<const CycleRecord> records);

Manifest parse_manifest(std::string_view json_text);
Manifest load_manifest(std::istream& in);
std::string manifest_to_json(const Manifest& manifest);

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// Labels every record from its manifest entry and routes it by split. Each
// split is ordered by (unit, cycle). Throws DataError for orphan units.
Dataset assemble_dataset(std::vector<CycleRecord> records, const Manifest& manifest);

}  // namespace prognos

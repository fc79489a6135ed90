#include "prognos/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prognos/errors.hpp"
#include "prognos/text_io.hpp"

namespace prognos {
namespace {

constexpr std::size_t kAuxColumns = 4;
constexpr std::size_t kCsvColumns = kAuxColumns + kNumSignals;

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

int parse_int_field(std::string_view field, std::size_t line, std::string_view column) {
  std::int64_t value = 0;
  if (!parse_int(field, value) || value < INT32_MIN || value > INT32_MAX) {
    fail_at(line, "column '" + std::string(column) + "' is not an integer: '" +
                      std::string(field) + "'");
  }
  return static_cast<int>(value);
}

FailureFlags parse_failures(const nlohmann::json& node, int unit_id) {
  if (!node.is_object()) {
    throw DataError("unit " + std::to_string(unit_id) + ": 'failures' must be an object");
  }
  FailureFlags flags;
  for (std::size_t c = 0; c < kNumComponents; ++c) {
    const std::string key(kComponentNames[c]);
    if (!node.contains(key)) {
      throw DataError("unit " + std::to_string(unit_id) + ": failures missing '" + key + "'");
    }
    const auto& bit = node.at(key);
    if (!bit.is_number_integer() || (bit.get<int>() != 0 && bit.get<int>() != 1)) {
      throw DataError("unit " + std::to_string(unit_id) + ": failures." + key + " must be 0 or 1");
    }
    flags[static_cast<Component>(c)] = bit.get<int>() == 1;
  }
  return flags;
}

}  // namespace

const std::string& canonical_csv_header() {
  static const std::string header = [] {
    std::string h = "unit,cycle,Fc,hs";
    for (const auto name : kSignalNames) {
      h += ',';
      h += name;
    }
    return h;
  }();
  return header;
}

std::vector<CycleRecord> parse_canonical_csv(std::istream& in) {
  std::vector<CycleRecord> records;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    throw DataError("line 1: missing header");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != canonical_csv_header()) {
    fail_at(line_no, "header does not match the canonical 22-column schema");
  }

  CycleRecord* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != kCsvColumns) {
      fail_at(line_no, "expected " + std::to_string(kCsvColumns) + " fields, got " +
                           std::to_string(fields.size()));
    }
    const int unit = parse_int_field(fields[0], line_no, "unit");
    const int cycle = parse_int_field(fields[1], line_no, "cycle");
    const int flight_class = parse_int_field(fields[2], line_no, "Fc");
    const int health = parse_int_field(fields[3], line_no, "hs");

    if (current == nullptr || current->unit_id != unit || current->cycle_number != cycle) {
      if (current != nullptr) {
        const RowKey prev{current->unit_id, current->cycle_number};
        const RowKey next{unit, cycle};
        if (!(prev < next)) {
          fail_at(line_no, "group (unit " + std::to_string(unit) + ", cycle " +
                               std::to_string(cycle) + ") out of ascending order");
        }
      }
      const bool new_unit = current == nullptr || current->unit_id != unit;
      if (new_unit && cycle != 1) {
        fail_at(line_no, "unit " + std::to_string(unit) + " does not start at cycle 1");
      }
      if (!new_unit && cycle != current->cycle_number + 1) {
        fail_at(line_no, "unit " + std::to_string(unit) + " skips from cycle " +
                             std::to_string(current->cycle_number) + " to " +
                             std::to_string(cycle));
      }
      if (!new_unit && current->health_state == 0 && health == 1) {
        fail_at(line_no, "unit " + std::to_string(unit) +
                             " health state returns to 1 after degradation");
      }
      records.emplace_back();
      current = &records.back();
      current->unit_id = unit;
      current->cycle_number = cycle;
      current->flight_class = flight_class;
      current->health_state = health;
      if (unit < 1 || cycle < 1) fail_at(line_no, "unit and cycle must be positive");
      if (flight_class < 1 || flight_class > 3) fail_at(line_no, "Fc must be 1, 2 or 3");
      if (health != 0 && health != 1) fail_at(line_no, "hs must be 0 or 1");
    } else {
      if (flight_class != current->flight_class) {
        fail_at(line_no, "Fc changes within unit " + std::to_string(unit) + " cycle " +
                             std::to_string(cycle));
      }
      if (health != current->health_state) {
        fail_at(line_no, "hs changes within unit " + std::to_string(unit) + " cycle " +
                             std::to_string(cycle));
      }
    }

    for (std::size_t s = 0; s < kNumSignals; ++s) {
      double value = 0.0;
      const auto field = fields[kAuxColumns + s];
      if (!parse_double(field, value) || !std::isfinite(value)) {
        fail_at(line_no, "column '" + std::string(kSignalNames[s]) +
                             "' is not a finite number: '" + std::string(field) + "'");
      }
      current->series[s].push_back(value);
    }
  }
  return records;
}

void write_canonical_csv(std::ostream& out, std::span<const CycleRecord> records) {
  out << canonical_csv_header() << '\n';
  std::string row;
  for (const auto& rec : records) {
    const std::string prefix = std::to_string(rec.unit_id) + ',' +
                               std::to_string(rec.cycle_number) + ',' +
                               std::to_string(rec.flight_class) + ',' +
                               std::to_string(rec.health_state);
    for (std::size_t t = 0; t < rec.length(); ++t) {
      row = prefix;
      for (std::size_t s = 0; s < kNumSignals; ++s) {
        row += ',';
        row += format_double(rec.series[s][t]);
      }
      row += '\n';
      out << row;
    }
  }
}

Manifest parse_manifest(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("units") || !doc.at("units").is_array()) {
    throw DataError("manifest must be an object with a 'units' array");
  }

  Manifest manifest;
  if (doc.contains("source")) {
    if (!doc.at("source").is_string()) throw DataError("manifest 'source' must be a string");
    manifest.source = doc.at("source").get<std::string>();
  }

  std::set<int> seen;
  for (const auto& node : doc.at("units")) {
    if (!node.is_object()) throw DataError("manifest unit entries must be objects");
    if (!node.contains("unit") || !node.at("unit").is_number_integer()) {
      throw DataError("manifest entry missing integer 'unit'");
    }
    UnitManifestEntry entry;
    entry.unit_id = node.at("unit").get<int>();
    const std::string who = "unit " + std::to_string(entry.unit_id);
    if (entry.unit_id < 1) throw DataError(who + ": unit id must be positive");
    if (!seen.insert(entry.unit_id).second) throw DataError(who + ": duplicate unit id");

    if (!node.contains("subset") || !node.at("subset").is_string()) {
      throw DataError(who + ": missing 'subset'");
    }
    entry.subset_name = node.at("subset").get<std::string>();

    if (!node.contains("split") || !node.at("split").is_string()) {
      throw DataError(who + ": missing 'split'");
    }
    entry.split = parse_split(node.at("split").get<std::string>());

    if (!node.contains("t_eol") || !node.at("t_eol").is_number_integer()) {
      throw DataError(who + ": missing integer 't_eol'");
    }
    entry.t_eol = node.at("t_eol").get<int>();
    if (entry.t_eol < 1) throw DataError(who + ": t_eol must be positive");

    if (node.contains("failures") && !node.at("failures").is_null()) {
      entry.failures = parse_failures(node.at("failures"), entry.unit_id);
    } else if (is_known_subset(entry.subset_name)) {
      entry.failures = failure_flags_for_subset(entry.subset_name);
    } else {
      throw DataError(who + ": unknown subset '" + entry.subset_name +
                      "' and no explicit 'failures'");
    }
    manifest.units.push_back(std::move(entry));
  }
  return manifest;
}

Manifest load_manifest(std::istream& in) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str());
}

std::string manifest_to_json(const Manifest& manifest) {
  nlohmann::ordered_json doc;
  doc["source"] = manifest.source;
  auto units = nlohmann::ordered_json::array();
  for (const auto& entry : manifest.units) {
    nlohmann::ordered_json node;
    node["unit"] = entry.unit_id;
    node["subset"] = entry.subset_name;
    node["split"] = std::string(to_string(entry.split));
    node["t_eol"] = entry.t_eol;
    nlohmann::ordered_json failures;
    for (std::size_t c = 0; c < kNumComponents; ++c) {
      failures[std::string(kComponentNames[c])] = entry.failures.at(c) ? 1 : 0;
    }
    node["failures"] = failures;
    units.push_back(node);
  }
  doc["units"] = units;
  return doc.dump(2) + "\n";
}

Dataset assemble_dataset(std::vector<CycleRecord> records, const Manifest& manifest) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return RowKey{a.unit_id, a.cycle_number} < RowKey{b.unit_id, b.cycle_number};
  });
  Dataset dataset;
  for (auto& rec : records) {
    const UnitManifestEntry* entry = manifest.find(rec.unit_id);
    if (entry == nullptr) {
      throw DataError("unit " + std::to_string(rec.unit_id) + " is not in the manifest");
    }
    LabelVector label = build_label_vector(rec, *entry);
    auto& target = entry->split == Split::kTrain ? dataset.train : dataset.test;
    target.push_back(Sample{std::move(rec), label});
  }
  return dataset;
}

}  // namespace prognos

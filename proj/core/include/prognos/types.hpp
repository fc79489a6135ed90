#pragma once

// Domain model shared by every stage of the pipeline: flight cycles, the
// per-cycle label vector, the subset failure-mode table and the unit manifest.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prognos {

inline constexpr std::size_t kNumSignals = 18;
inline constexpr std::size_t kNumComponents = 5;
// Classification heads: health state followed by the five components.
inline constexpr std::size_t kNumClassHeads = 1 + kNumComponents;
// All model outputs: the classification heads plus RUL.
inline constexpr std::size_t kNumOutputs = kNumClassHeads + 1;

// Flight descriptors W1..W4 followed by sensors Xs1..Xs14.
inline constexpr std::array<std::string_view, kNumSignals> kSignalNames = {
    "alt", "Mach", "TRA", "T2",  "Wf",  "Nf",  "Nc",   "T24", "T30",
    "T48", "T50",  "P15", "P2",  "P21", "P24", "Ps30", "P40", "P50"};

enum class Component : std::uint8_t { kFan, kLpc, kHpc, kHpt, kLpt };

inline constexpr std::array<std::string_view, kNumComponents> kComponentNames = {
    "fan", "lpc", "hpc", "hpt", "lpt"};

inline constexpr std::array<std::string_view, kNumClassHeads> kClassHeadNames = {
    "hs", "fan", "lpc", "hpc", "hpt", "lpt"};

// Index of a named signal in kSignalNames; throws std::out_of_range.
std::size_t signal_index(std::string_view name);

// Eventual-failure bits, one per component.
struct FailureFlags {
  bool fan = false;
  bool lpc = false;
  bool hpc = false;
  bool hpt = false;
  bool lpt = false;

  bool operator[](Component c) const;
  bool& operator[](Component c);
  bool at(std::size_t i) const { return (*this)[static_cast<Component>(i)]; }
  std::size_t count() const { return fan + lpc + hpc + hpt + lpt; }

  friend bool operator==(const FailureFlags&, const FailureFlags&) = default;
};

enum class Split : std::uint8_t { kTrain, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

inline constexpr std::array<std::string_view, 8> kSubsetNames = {
    "DS01", "DS03", "DS04", "DS05", "DS06", "DS07", "DS08a", "DS08c"};

bool is_known_subset(std::string_view subset_name);

// Failure-mode table of the eight N-CMAPSS subsets. Throws DataError naming
// the subset when it is not one of kSubsetNames.
FailureFlags failure_flags_for_subset(std::string_view subset_name);

// One flight cycle of one unit: auxiliary fields plus the 18 aligned signals
// in kSignalNames order, one entry per timestamp.
struct CycleRecord {
  int unit_id = 0;
  int cycle_number = 0;
  int flight_class = 1;
  int health_state = 1;
  std::array<std::vector<double>, kNumSignals> series;

  std::size_t length() const { return series[0].size(); }

  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

// Throws DataError when the record breaks a field or length invariant.
void validate(const CycleRecord& record);

// Checks the per-unit sequence invariants over records sorted by
// (unit, cycle): cycles numbered 1, 2, ... without gaps, and health state
// never returning to 1 once it has dropped to 0.
void validate_unit_sequences(std::span<const CycleRecord> records);

struct LabelVector {
  int hs = 1;
  FailureFlags ef;
  int rul = 0;

  // [hs, fan, lpc, hpc, hpt, lpt] as 0/1.
  std::array<double, kNumClassHeads> class_bits() const;

  friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

struct UnitManifestEntry {
  int unit_id = 0;
  std::string subset_name;
  Split split = Split::kTrain;
  int t_eol = 0;
  FailureFlags failures;

  friend bool operator==(const UnitManifestEntry&, const UnitManifestEntry&) = default;
};

struct Manifest {
  std::string source;
  std::vector<UnitManifestEntry> units;

  // Entry for `unit_id` or nullptr.
  const UnitManifestEntry* find(int unit_id) const;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

// RUL = t_eol - cycle_number. Throws DataError if the record belongs to a
// different unit or lies past end of life.
LabelVector build_label_vector(const CycleRecord& record, const UnitManifestEntry& entry);

struct RowKey {
  int unit_id = 0;
  int cycle_number = 0;

  friend bool operator==(const RowKey&, const RowKey&) = default;
  friend auto operator<=>(const RowKey&, const RowKey&) = default;
};

struct Sample {
  CycleRecord record;
  LabelVector label;
};

}  // namespace prognos

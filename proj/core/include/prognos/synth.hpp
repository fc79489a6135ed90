#pragma once

// Deterministic synthetic run-to-failure fleet with the same structure as the
// N-CMAPSS release: per-unit lifetimes, a single healthy->unhealthy
// transition, and component-specific sensor drift growing toward end of life.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "prognos/types.hpp"

namespace prognos {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct SynthConfig {
  int n_units = 90;
  IntRange lifetime_range{60, 100};
  IntRange cycle_length_range{200, 600};
  // (subset name, proportion); proportions must sum to 1.
  std::vector<std::pair<std::string, double>> subset_mix = default_subset_mix();
  // Gaussian noise standard deviation relative to each signal's baseline.
  double noise_scale = 0.01;
  // Fraction of units placed in the test split, stratified by subset.
  double test_fraction = 1.0 / 3.0;
  std::uint64_t seed = 0;

  static std::vector<std::pair<std::string, double>> default_subset_mix();
};

// Throws ConfigError describing the first violated constraint.
void validate(const SynthConfig& config);

struct Fleet {
  std::vector<CycleRecord> records;
  Manifest manifest;
};

// Every unit draws from its own xoshiro256** stream seeded with
// derive_seed(config.seed, unit index), so the result does not depend on the
// order units are generated in.
Fleet generate_fleet(const SynthConfig& config);

// Signals that drift when `component` degrades.
std::pair<std::size_t, std::size_t> drift_signals(Component component);

}  // namespace prognos

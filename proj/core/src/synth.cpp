#include "prognos/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "prognos/errors.hpp"
#include "prognos/random.hpp"

namespace prognos {
namespace {

struct SignalModel {
  double baseline;       // nominal level, engineering units
  double profile_gain;   // relative swing over the climb/cruise/descent shape
  double class_gain;     // relative shift per flight-class step
};

// alt, Mach, TRA, T2, Wf, Nf, Nc, T24, T30, T48, T50, P15, P2, P21, P24, Ps30, P40, P50
constexpr std::array<SignalModel, kNumSignals> kSignalModels = {{
    {20000.0, 0.90, 0.15},  // alt [ft]
    {0.55, 0.50, 0.08},     // Mach
    {60.0, 0.30, 0.04},     // TRA [%]
    {500.0, 0.05, 0.01},    // T2 [R]
    {3.0, 0.25, 0.05},      // Wf [pps]
    {2100.0, 0.10, 0.02},   // Nf [rpm]
    {8800.0, 0.06, 0.01},   // Nc [rpm]
    {600.0, 0.05, 0.01},    // T24 [R]
    {1500.0, 0.06, 0.01},   // T30 [R]
    {1900.0, 0.07, 0.015},  // T48 [R]
    {1300.0, 0.06, 0.01},   // T50 [R]
    {14.0, 0.15, 0.03},     // P15 [psia]
    {11.0, 0.20, 0.04},     // P2 [psia]
    {15.0, 0.15, 0.03},     // P21 [psia]
    {20.0, 0.15, 0.03},     // P24 [psia]
    {300.0, 0.20, 0.04},    // Ps30 [psia]
    {310.0, 0.20, 0.04},    // P40 [psia]
    {12.0, 0.12, 0.02},     // P50 [psia]
}};

// Relative drift of a degrading component's signals at end of life.
constexpr double kDriftAtEndOfLife = 0.08;

// Climb / cruise / descent envelope over normalised flight time in [0, 1].
double flight_profile(double tau) {
  return std::min({1.0, 4.0 * tau, 4.0 * (1.0 - tau)});
}

int flight_class_for_length(int length, IntRange range) {
  const double span = static_cast<double>(range.hi - range.lo + 1);
  const double rel = static_cast<double>(length - range.lo) / span;
  return rel < 1.0 / 3.0 ? 1 : (rel < 2.0 / 3.0 ? 2 : 3);
}

}  // namespace

std::vector<std::pair<std::string, double>> SynthConfig::default_subset_mix() {
  std::vector<std::pair<std::string, double>> mix;
  for (const auto name : kSubsetNames) mix.emplace_back(std::string(name), 1.0 / 8.0);
  return mix;
}

void validate(const SynthConfig& config) {
  if (config.n_units < 1) throw ConfigError("synth: n_units must be positive");
  if (config.lifetime_range.lo < 1 || config.lifetime_range.hi < config.lifetime_range.lo) {
    throw ConfigError("synth: lifetime_range must be a nonempty range of positive cycles");
  }
  if (config.cycle_length_range.lo < 1 ||
      config.cycle_length_range.hi < config.cycle_length_range.lo) {
    throw ConfigError("synth: cycle_length_range must be a nonempty range of positive lengths");
  }
  if (config.subset_mix.empty()) throw ConfigError("synth: subset_mix is empty");
  double total = 0.0;
  for (const auto& [name, weight] : config.subset_mix) {
    if (!is_known_subset(name)) throw ConfigError("synth: unknown subset '" + name + "'");
    if (!(weight >= 0.0)) throw ConfigError("synth: negative proportion for '" + name + "'");
    total += weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("synth: subset_mix proportions sum to " + std::to_string(total) +
                      ", expected 1");
  }
  if (!(config.noise_scale > 0.0) || !std::isfinite(config.noise_scale)) {
    throw ConfigError("synth: noise_scale must be a positive real");
  }
  if (!(config.test_fraction >= 0.0 && config.test_fraction <= 1.0)) {
    throw ConfigError("synth: test_fraction must lie in [0, 1]");
  }
}

std::pair<std::size_t, std::size_t> drift_signals(Component component) {
  switch (component) {
    case Component::kFan: return {signal_index("Nf"), signal_index("P21")};
    case Component::kLpc: return {signal_index("T24"), signal_index("P24")};
    case Component::kHpc: return {signal_index("T30"), signal_index("Ps30")};
    case Component::kHpt: return {signal_index("T48"), signal_index("P40")};
    case Component::kLpt: return {signal_index("T50"), signal_index("P50")};
  }
  throw std::out_of_range("component");
}

Fleet generate_fleet(const SynthConfig& config) {
  validate(config);
  Fleet fleet;
  fleet.manifest.source = "synthetic fleet (seed " + std::to_string(config.seed) + ")";

  for (int u = 0; u < config.n_units; ++u) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(u)));
    const int unit_id = u + 1;

    // Subset by inverse CDF over the mix.
    const double pick = rng.uniform();
    std::string subset = config.subset_mix.back().first;
    double cumulative = 0.0;
    for (const auto& [name, weight] : config.subset_mix) {
      cumulative += weight;
      if (pick < cumulative) {
        subset = name;
        break;
      }
    }
    const FailureFlags failures = failure_flags_for_subset(subset);
    const int t_eol =
        static_cast<int>(rng.uniform_int(config.lifetime_range.lo, config.lifetime_range.hi));
    const int first_unhealthy = static_cast<int>(rng.uniform_int(
        static_cast<std::int64_t>(std::ceil(0.4 * t_eol)),
        static_cast<std::int64_t>(std::floor(0.8 * t_eol))));

    std::array<bool, kNumSignals> drifts{};
    for (std::size_t c = 0; c < kNumComponents; ++c) {
      if (!failures.at(c)) continue;
      const auto [a, b] = drift_signals(static_cast<Component>(c));
      drifts[a] = drifts[b] = true;
    }

    for (int cycle = 1; cycle <= t_eol; ++cycle) {
      CycleRecord rec;
      rec.unit_id = unit_id;
      rec.cycle_number = cycle;
      const int length = static_cast<int>(
          rng.uniform_int(config.cycle_length_range.lo, config.cycle_length_range.hi));
      rec.flight_class = flight_class_for_length(length, config.cycle_length_range);
      rec.health_state = cycle < first_unhealthy ? 1 : 0;
      const double life_fraction = static_cast<double>(cycle) / t_eol;
      const double class_step = rec.flight_class - 2.0;

      for (std::size_t s = 0; s < kNumSignals; ++s) {
        const SignalModel& model = kSignalModels[s];
        const double drift = drifts[s] ? kDriftAtEndOfLife * life_fraction : 0.0;
        auto& series = rec.series[s];
        series.resize(static_cast<std::size_t>(length));
        for (int t = 0; t < length; ++t) {
          const double tau = length > 1 ? static_cast<double>(t) / (length - 1) : 0.5;
          const double shape = model.profile_gain * (flight_profile(tau) - 0.5);
          const double level = 1.0 + shape + model.class_gain * class_step + drift;
          series[static_cast<std::size_t>(t)] =
              model.baseline * (level + config.noise_scale * rng.normal());
        }
      }
      fleet.records.push_back(std::move(rec));
    }

    fleet.manifest.units.push_back(
        UnitManifestEntry{unit_id, subset, Split::kTrain, t_eol, failures});
  }

  // Stratified split: walk units ordered by (subset, id) and send every
  // 1/test_fraction-th one to test, so each subset lands in both splits.
  std::vector<std::size_t> order(fleet.manifest.units.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fleet.manifest.units[a].subset_name < fleet.manifest.units[b].subset_name;
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto before = static_cast<long long>(std::floor(k * config.test_fraction + 1e-12));
    const auto after = static_cast<long long>(std::floor((k + 1) * config.test_fraction + 1e-12));
    if (after > before) fleet.manifest.units[order[k]].split = Split::kTest;
  }
  return fleet;
}

}  // namespace prognos

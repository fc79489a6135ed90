#include <benchmark/benchmark.h>

#include "prognos/ann.hpp"
#include "prognos/features.hpp"
#include "prognos/forest.hpp"
#include "prognos/ingest.hpp"
#include "prognos/loss.hpp"
#include "prognos/preprocess.hpp"
#include "prognos/synth.hpp"

namespace {

using namespace prognos;

// A small fleet shared by every benchmark; train split only.
const LabelledFeatures& fleet_features() {
  static const LabelledFeatures features = [] {
    SynthConfig config;
    config.n_units = 12;
    config.seed = 11;
    Fleet fleet = generate_fleet(config);
    const Dataset data = assemble_dataset(std::move(fleet.records), fleet.manifest);
    return extract_matrix(data.train);
  }();
  return features;
}

void BM_ExtractCycleFeatures(benchmark::State& state) {
  SynthConfig config;
  config.n_units = 1;
  config.seed = 3;
  config.cycle_length_range = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
  const Fleet fleet = generate_fleet(config);
  const CycleRecord& record = fleet.records.front();
  for (auto _ : state) benchmark::DoNotOptimize(extract_cycle_features(record));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExtractCycleFeatures)->Arg(200)->Arg(600)->Arg(5000);

void BM_JacobiCorrelation129(benchmark::State& state) {
  const Matrix& x = fleet_features().features.values;
  const Matrix q = correlation_matrix(apply_minmax(fit_minmax(x), x));
  for (auto _ : state) benchmark::DoNotOptimize(symmetric_eig(q));
}
BENCHMARK(BM_JacobiCorrelation129)->Unit(benchmark::kMillisecond);

void BM_AnnEpoch(benchmark::State& state) {
  const auto& data = fleet_features();
  const Matrix x = apply_minmax(fit_minmax(data.features.values), data.features.values);
  const LabelBatch labels = make_label_batch(data.labels);
  const ModelParams params = init_network(x.cols(), 1);
  const TrainConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(params, x, labels, config));
  state.counters["rows"] = static_cast<double>(x.rows());
}
BENCHMARK(BM_AnnEpoch)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
  const auto& data = fleet_features();
  const Matrix y = scale_labels(data.labels, 100.0);
  ForestConfig config;
  config.n_estimators = 4;
  config.variant = state.range(0) == 0 ? ForestVariant::kRf : ForestVariant::kErf;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(data.features.values, y, config));
}
BENCHMARK(BM_ForestFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

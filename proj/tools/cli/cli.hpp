#pragma once

// Batch command-line surface: synth, featurize, train, evaluate, report.
//
// Every command reads one JSON run configuration (see RunConfig) with
// command-line overrides, echoes the resolved configuration into the output
// directory and maps failures onto exit codes: 0 success, 2 configuration
// error, 3 data error, 4 numeric failure.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "prognos/ann.hpp"
#include "prognos/forest.hpp"
#include "prognos/preprocess.hpp"
#include "prognos/synth.hpp"

namespace prognos::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

enum class ModelKind { kAnn, kRf, kErf };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct RunConfig {
  // Paths. Empty data paths default to <out_dir>/fleet.csv and
  // <out_dir>/manifest.json; empty feature_cache_dir defaults to out_dir.
  std::string data_csv;
  std::string manifest;
  std::string out_dir = "out";
  std::string feature_cache_dir;
  std::string predictions;  // external predictions CSV for evaluate/report

  // Pipeline flags.
  bool pca = true;
  PcaMode pca_mode = PcaMode::kLiteral;
  LossKind loss = LossKind::kComposite;
  std::optional<double> gamma;  // composite only; default 10
  ModelKind model = ModelKind::kAnn;
  std::uint64_t seed = 0;
  int epochs = 5000;
  bool rul_rectify = false;
  double label_scale = 100.0;
  int n_estimators = 100;

  SynthConfig synth;

  std::string data_csv_path() const;
  std::string manifest_path() const;
  std::string cache_dir() const;
  // Short model label such as "ANN-composite+PCA" or "RF".
  std::string model_label() const;
  TrainConfig train_config() const;
  ForestConfig forest_config() const;
};

// Throws ConfigError on malformed JSON, unknown keys or invalid values.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& config);

// Flag-combination checks shared by every command.
void validate(const RunConfig& config);

void cmd_synth(const RunConfig& config, std::ostream& log);
// Skips (with a notice) when all four cache files already exist, unless force.
void cmd_featurize(const RunConfig& config, std::ostream& log, bool force = false);
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_evaluate(const RunConfig& config, std::ostream& log);
void cmd_report(const RunConfig& config, std::ostream& log);

// Parses arguments (argv[0] is the program name), dispatches, and returns
// the process exit code. Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prognos::cli

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "prognos/errors.hpp"
#include "prognos/features.hpp"
#include "prognos/ingest.hpp"
#include "prognos/metrics.hpp"
#include "prognos/report.hpp"
#include "prognos/text_io.hpp"

namespace prognos::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory '" + dir + "'");
  }
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw DataError(what + " '" + path + "' does not exist");
}

std::ifstream open_input(const std::string& path, const std::string& what) {
  require_file(path, what);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + what + " '" + path + "'");
  return in;
}

template <typename T>
T get_as(const Json& node, const char* key) {
  try {
    return node.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

IntRange parse_range(const Json& node, const char* key) {
  const auto values = get_as<std::vector<int>>(node, key);
  if (values.size() != 2) throw ConfigError(std::string("config key '") + key + "' must be [lo, hi]");
  return {values[0], values[1]};
}

struct CachePaths {
  std::string train_features, test_features, train_labels, test_labels;

  explicit CachePaths(const std::string& dir)
      : train_features(join(dir, "features_train.csv")),
        test_features(join(dir, "features_test.csv")),
        train_labels(join(dir, "labels_train.csv")),
        test_labels(join(dir, "labels_test.csv")) {}

  bool complete() const {
    return fs::is_regular_file(train_features) && fs::is_regular_file(test_features) &&
           fs::is_regular_file(train_labels) && fs::is_regular_file(test_labels);
  }
};

struct CachedSplit {
  FeatureMatrix features;
  std::vector<LabelVector> labels;
};

CachedSplit read_split(const std::string& features_path, const std::string& labels_path) {
  CachedSplit split;
  auto feature_in = open_input(features_path, "feature cache");
  split.features = read_feature_cache(feature_in);
  auto label_in = open_input(labels_path, "label cache");
  std::vector<RowKey> keys;
  split.labels = read_label_cache(label_in, &keys);
  if (keys != split.features.row_keys) {
    throw DataError("feature cache '" + features_path + "' and label cache '" + labels_path +
                    "' disagree on rows");
  }
  return split;
}

void write_resolved_config(const RunConfig& config) {
  ensure_dir(config.out_dir);
  write_file(join(config.out_dir, "resolved_config.json"), run_config_to_json(config));
}

Manifest read_manifest(const RunConfig& config) {
  auto in = open_input(config.manifest_path(), "manifest");
  return load_manifest(in);
}

void write_report_products(const RunConfig& config, const CachedSplit& test,
                           const PredictionBatch& preds, const std::string& model_name,
                           std::ostream& log) {
  const Manifest manifest = read_manifest(config);
  MetricsReport metrics =
      evaluate(test.labels, test.features.row_keys, preds, manifest, config.train_config().loss_config);
  metrics.model_name = model_name;
  const ReportBundle bundle = build_report(test.labels, preds, metrics);
  const std::string& out = config.out_dir;
  write_file(join(out, "metrics.json"), metrics_to_json(metrics));
  write_file(join(out, "metrics.txt"), metrics_to_text(metrics));
  write_file(join(out, "parity.csv"), parity_to_csv(bundle.parity));
  write_file(join(out, "sorted_rul.csv"), sorted_rul_to_csv(bundle.sorted_rul));
  write_file(join(out, "error_by_health.csv"), boxes_to_csv(bundle.by_health.groups));
  write_file(join(out, "error_by_component.csv"), boxes_to_csv(bundle.by_component));
  write_file(join(out, "parity.svg"), render_parity_svg(bundle.parity));
  write_file(join(out, "sorted_rul.svg"), render_sorted_rul_svg(bundle.sorted_rul));
  write_file(join(out, "error_by_health.svg"),
             render_box_svg(bundle.by_health.groups, "RUL error by health state"));
  write_file(join(out, "error_by_component.svg"),
             render_box_svg(bundle.by_component, "RUL error by eventual failing component"));
  write_file(join(out, "report.json"), report_to_json(bundle));
  for (const auto& w : bundle.by_health.warnings) log << "warning: " << w << '\n';
  if (metrics.has_undefined()) log << "warning: some classification heads are single-class\n";
  log << metrics_to_text(metrics);
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kAnn: return "ann";
    case ModelKind::kRf: return "rf";
    case ModelKind::kErf: return "erf";
  }
  return "ann";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "ann") return ModelKind::kAnn;
  if (text == "rf") return ModelKind::kRf;
  if (text == "erf") return ModelKind::kErf;
  throw ConfigError("unknown model '" + std::string(text) + "' (expected ann|rf|erf)");
}

std::string RunConfig::data_csv_path() const {
  return data_csv.empty() ? join(out_dir, "fleet.csv") : data_csv;
}

std::string RunConfig::manifest_path() const {
  return manifest.empty() ? join(out_dir, "manifest.json") : manifest;
}

std::string RunConfig::cache_dir() const {
  return feature_cache_dir.empty() ? out_dir : feature_cache_dir;
}

std::string RunConfig::model_label() const {
  std::string label;
  switch (model) {
    case ModelKind::kAnn: label = loss == LossKind::kComposite ? "ANN-composite" : "ANN-MSE"; break;
    case ModelKind::kRf: label = "RF"; break;
    case ModelKind::kErf: label = "ERF"; break;
  }
  return pca ? label + "+PCA" : label;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.loss = loss;
  tc.loss_config.gamma = gamma.value_or(10.0);
  tc.label_scale = label_scale;
  tc.seed = seed;
  tc.rul_rectify = rul_rectify;
  return tc;
}

ForestConfig RunConfig::forest_config() const {
  ForestConfig fc;
  fc.n_estimators = n_estimators;
  fc.variant = model == ModelKind::kErf ? ForestVariant::kErf : ForestVariant::kRf;
  fc.seed = seed;
  return fc;
}

RunConfig parse_run_config(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("run config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");

  RunConfig c;
  bool synth_seed_set = false;
  for (const auto& [key, value] : doc.items()) {
    if (key == "data_csv") c.data_csv = get_as<std::string>(doc, "data_csv");
    else if (key == "manifest") c.manifest = get_as<std::string>(doc, "manifest");
    else if (key == "out_dir") c.out_dir = get_as<std::string>(doc, "out_dir");
    else if (key == "feature_cache_dir") c.feature_cache_dir = get_as<std::string>(doc, "feature_cache_dir");
    else if (key == "predictions") c.predictions = get_as<std::string>(doc, "predictions");
    else if (key == "pca") c.pca = get_as<bool>(doc, "pca");
    else if (key == "pca_mode") c.pca_mode = parse_pca_mode(get_as<std::string>(doc, "pca_mode"));
    else if (key == "loss") c.loss = parse_loss_kind(get_as<std::string>(doc, "loss"));
    else if (key == "gamma") c.gamma = get_as<double>(doc, "gamma");
    else if (key == "model") c.model = parse_model_kind(get_as<std::string>(doc, "model"));
    else if (key == "seed") c.seed = get_as<std::uint64_t>(doc, "seed");
    else if (key == "epochs") c.epochs = get_as<int>(doc, "epochs");
    else if (key == "rul_rectify") c.rul_rectify = get_as<bool>(doc, "rul_rectify");
    else if (key == "label_scale") c.label_scale = get_as<double>(doc, "label_scale");
    else if (key == "n_estimators") c.n_estimators = get_as<int>(doc, "n_estimators");
    else if (key == "synth") {
      if (!value.is_object()) throw ConfigError("config key 'synth' must be an object");
      for (const auto& [skey, svalue] : value.items()) {
        if (skey == "n_units") c.synth.n_units = get_as<int>(value, "n_units");
        else if (skey == "lifetime_range") c.synth.lifetime_range = parse_range(value, "lifetime_range");
        else if (skey == "cycle_length_range") c.synth.cycle_length_range = parse_range(value, "cycle_length_range");
        else if (skey == "noise_scale") c.synth.noise_scale = get_as<double>(value, "noise_scale");
        else if (skey == "test_fraction") c.synth.test_fraction = get_as<double>(value, "test_fraction");
        else if (skey == "seed") {
          c.synth.seed = get_as<std::uint64_t>(value, "seed");
          synth_seed_set = true;
        } else if (skey == "subset_mix") {
          if (!svalue.is_object()) throw ConfigError("synth.subset_mix must be an object");
          c.synth.subset_mix.clear();
          for (const auto& [name, weight] : svalue.items()) {
            if (!weight.is_number()) throw ConfigError("synth.subset_mix values must be numbers");
            c.synth.subset_mix.emplace_back(name, weight.get<double>());
          }
        } else {
          throw ConfigError("unknown config key 'synth." + skey + "'");
        }
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (!synth_seed_set) c.synth.seed = c.seed;
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string run_config_to_json(const RunConfig& c) {
  Json doc;
  doc["data_csv"] = c.data_csv_path();
  doc["manifest"] = c.manifest_path();
  doc["out_dir"] = c.out_dir;
  doc["feature_cache_dir"] = c.cache_dir();
  doc["predictions"] = c.predictions;
  doc["pca"] = c.pca;
  doc["pca_mode"] = std::string(to_string(c.pca_mode));
  doc["loss"] = std::string(to_string(c.loss));
  if (c.gamma) doc["gamma"] = *c.gamma;
  doc["model"] = std::string(to_string(c.model));
  doc["seed"] = c.seed;
  doc["epochs"] = c.epochs;
  doc["rul_rectify"] = c.rul_rectify;
  doc["label_scale"] = c.label_scale;
  doc["n_estimators"] = c.n_estimators;
  Json synth;
  synth["n_units"] = c.synth.n_units;
  synth["lifetime_range"] = {c.synth.lifetime_range.lo, c.synth.lifetime_range.hi};
  synth["cycle_length_range"] = {c.synth.cycle_length_range.lo, c.synth.cycle_length_range.hi};
  Json mix = Json::object();
  for (const auto& [name, weight] : c.synth.subset_mix) mix[name] = weight;
  synth["subset_mix"] = mix;
  synth["noise_scale"] = c.synth.noise_scale;
  synth["test_fraction"] = c.synth.test_fraction;
  synth["seed"] = c.synth.seed;
  doc["synth"] = synth;
  return doc.dump(2) + "\n";
}

void validate(const RunConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (config.gamma && (config.model != ModelKind::kAnn || config.loss != LossKind::kComposite)) {
    throw ConfigError("gamma only applies to the ann model with the composite loss");
  }
  if (config.model == ModelKind::kAnn) {
    validate(config.train_config());
  } else {
    validate(config.forest_config());
    if (!(config.label_scale > 0.0)) throw ConfigError("label_scale must be positive");
  }
}

void cmd_synth(const RunConfig& config, std::ostream& log) {
  validate(config.synth);
  ensure_dir(config.out_dir);
  const Fleet fleet = generate_fleet(config.synth);
  {
    std::ofstream csv(config.data_csv_path(), std::ios::binary | std::ios::trunc);
    if (!csv) throw ConfigError("cannot write '" + config.data_csv_path() + "'");
    write_canonical_csv(csv, fleet.records);
    if (!csv) throw ConfigError("failed writing '" + config.data_csv_path() + "'");
  }
  write_file(config.manifest_path(), manifest_to_json(fleet.manifest));
  write_resolved_config(config);

  std::size_t train_cycles = 0;
  for (const auto& rec : fleet.records) {
    train_cycles += fleet.manifest.find(rec.unit_id)->split == Split::kTrain;
  }
  log << "synth: " << fleet.manifest.units.size() << " units, " << fleet.records.size()
      << " cycles (" << train_cycles << " train / " << fleet.records.size() - train_cycles
      << " test) -> " << config.data_csv_path() << ", " << config.manifest_path() << '\n';
}

void cmd_featurize(const RunConfig& config, std::ostream& log, bool force) {
  const CachePaths cache(config.cache_dir());
  if (!force && cache.complete()) {
    log << "featurize: feature cache present in '" << config.cache_dir() << "', skipping\n";
    return;
  }
  const Manifest manifest = read_manifest(config);
  if (manifest.units.empty()) throw DataError("manifest '" + config.manifest_path() + "' has no units");
  std::vector<CycleRecord> records;
  {
    auto in = open_input(config.data_csv_path(), "telemetry CSV");
    try {
      records = parse_canonical_csv(in);
    } catch (const DataError& e) {
      throw DataError(config.data_csv_path() + ": " + e.what());
    }
  }
  const Dataset dataset = assemble_dataset(std::move(records), manifest);
  if (dataset.train.empty() || dataset.test.empty()) {
    throw DataError("both train and test splits need at least one cycle");
  }
  ensure_dir(config.cache_dir());
  const auto train = extract_matrix(dataset.train);
  const auto test = extract_matrix(dataset.test);
  const auto write_split = [](const std::string& fpath, const std::string& lpath,
                              const LabelledFeatures& split) {
    std::ostringstream features;
    write_feature_cache(features, split.features);
    write_file(fpath, features.str());
    std::ostringstream labels;
    write_label_cache(labels, split.features.row_keys, split.labels);
    write_file(lpath, labels.str());
  };
  write_split(cache.train_features, cache.train_labels, train);
  write_split(cache.test_features, cache.test_labels, test);
  write_resolved_config(config);
  log << "featurize: train " << train.features.values.rows() << "x" << kNumFeatures << ", test "
      << test.features.values.rows() << "x" << kNumFeatures << " -> " << config.cache_dir() << '\n';
}

void cmd_train(const RunConfig& config, std::ostream& log) {
  validate(config);
  const CachePaths cache(config.cache_dir());
  if (!cache.complete()) cmd_featurize(config, log);
  const CachedSplit fit_split = read_split(cache.train_features, cache.train_labels);
  if (fit_split.labels.size() < 2) throw DataError("training split needs at least 2 cycles");

  const FeatureTransform transform = fit_feature_transform(
      fit_split.features.values, config.pca, config.pca_mode, feature_schema_hash());
  const Matrix x = apply_feature_transform(transform, fit_split.features.values);
  ensure_dir(config.out_dir);
  write_file(join(config.out_dir, "transform.json"), feature_transform_to_json(transform));

  if (config.model == ModelKind::kAnn) {
    const TrainConfig tc = config.train_config();
    const TrainResult result = prognos::train(x, fit_split.labels, tc);
    write_file(join(config.out_dir, "model.json"),
               ann_to_json(result.params, tc, transform.schema_hash));
    std::string history = "epoch,loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      history += std::to_string(e) + ',' + format_double(result.loss_history[e]) + '\n';
    }
    write_file(join(config.out_dir, "loss_history.csv"), history);
    log << "train: " << config.model_label() << ", " << tc.epochs << " epochs, loss "
        << format_fixed(result.loss_history.front(), 4) << " -> "
        << format_fixed(result.loss_history.back(), 4) << '\n';
  } else {
    const ForestConfig fc = config.forest_config();
    const ForestModel model = fit_forest(x, scale_labels(fit_split.labels, config.label_scale), fc);
    write_file(join(config.out_dir, "model.json"),
               forest_to_json(model, config.label_scale, transform.schema_hash));
    log << "train: " << config.model_label() << ", " << fc.n_estimators << " trees\n";
  }
  write_resolved_config(config);
}

void cmd_evaluate(const RunConfig& config, std::ostream& log) {
  validate(config);
  const CachePaths cache(config.cache_dir());
  if (!cache.complete()) cmd_featurize(config, log);
  const CachedSplit test = read_split(cache.test_features, cache.test_labels);
  ensure_dir(config.out_dir);

  PredictionBatch preds;
  std::string model_name;
  if (!config.predictions.empty()) {
    auto in = open_input(config.predictions, "predictions file");
    preds = align_predictions(read_predictions_csv(in), test.features.row_keys);
    model_name = "external";
  } else {
    const std::string transform_path = join(config.out_dir, "transform.json");
    const std::string model_path = join(config.out_dir, "model.json");
    require_file(transform_path, "transform file");
    require_file(model_path, "model file");
    const FeatureTransform transform = feature_transform_from_json(read_file(transform_path));
    if (transform.schema_hash != feature_schema_hash()) {
      throw DataError("schema hash mismatch: transform was fitted on schema " +
                      transform.schema_hash + ", features use " + feature_schema_hash());
    }
    const Matrix x = apply_feature_transform(transform, test.features.values);
    const std::string model_text = read_file(model_path);
    const auto kind = nlohmann::json::parse(model_text, nullptr, false);
    if (kind.is_discarded() || !kind.contains("kind")) throw DataError("model file is not valid JSON");
    std::string model_hash;
    if (kind.at("kind") == "ann") {
      const AnnArtifact art = ann_from_json(model_text);
      model_hash = art.schema_hash;
      if (art.params.input_width() != x.cols()) throw DataError("model/transform width mismatch");
      preds = predict(art.params, x, art.config);
    } else {
      const ForestArtifact art = forest_from_json(model_text);
      model_hash = art.schema_hash;
      preds = forest_predict(art.model, x, art.label_scale);
    }
    if (model_hash != transform.schema_hash) {
      throw DataError("schema hash mismatch between model and transform");
    }
    model_name = config.model_label();
    std::ostringstream csv;
    write_predictions_csv(csv, test.features.row_keys, preds);
    write_file(join(config.out_dir, "predictions.csv"), csv.str());
  }
  write_report_products(config, test, preds, model_name, log);
  write_resolved_config(config);
}

void cmd_report(const RunConfig& config, std::ostream& log) {
  const CachePaths cache(config.cache_dir());
  const CachedSplit test = read_split(cache.test_features, cache.test_labels);
  const std::string path =
      config.predictions.empty() ? join(config.out_dir, "predictions.csv") : config.predictions;
  auto in = open_input(path, "predictions file");
  const PredictionBatch preds = align_predictions(read_predictions_csv(in), test.features.row_keys);
  ensure_dir(config.out_dir);
  write_report_products(config, test, preds,
                        config.predictions.empty() ? config.model_label() : "external", log);
  write_resolved_config(config);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"prognos: turbofan fault prognosis pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> epochs;
  std::string model, loss, pca, pca_mode, predictions;
  std::optional<double> gamma;
  bool rul_rectify = false;
  bool force = false;

  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the seed");
  app.add_option("--out", out_dir, "Override the output directory");
  app.add_option("--epochs", epochs, "Override ANN epochs");
  app.add_option("--model", model, "ann | rf | erf");
  app.add_option("--loss", loss, "composite | mse");
  app.add_option("--gamma", gamma, "Classification weight of the composite loss");
  app.add_option("--pca", pca, "on | off");
  app.add_option("--pca-mode", pca_mode, "literal | standardized");
  app.add_option("--predictions", predictions, "External predictions CSV to score");
  app.add_flag("--rul-rectify", rul_rectify, "Clamp RUL predictions at 0");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic fleet (CSV + manifest)");
  auto* featurize = app.add_subcommand("featurize", "Extract and cache per-cycle features");
  featurize->add_flag("--force", force, "Recompute even if the cache exists");
  auto* train = app.add_subcommand("train", "Fit preprocessing and train the selected model");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score the test split and write the report");
  auto* report = app.add_subcommand("report", "Rebuild report products from a predictions CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) {
      if (config.synth.seed == config.seed) config.synth.seed = *seed;
      config.seed = *seed;
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (epochs) config.epochs = *epochs;
    if (!model.empty()) config.model = parse_model_kind(model);
    if (!loss.empty()) config.loss = parse_loss_kind(loss);
    if (gamma) config.gamma = *gamma;
    if (!pca.empty()) {
      if (pca != "on" && pca != "off") throw ConfigError("--pca expects on|off");
      config.pca = pca == "on";
    }
    if (!pca_mode.empty()) config.pca_mode = parse_pca_mode(pca_mode);
    if (!predictions.empty()) config.predictions = predictions;
    if (rul_rectify) config.rul_rectify = true;

    if (*synth) cmd_synth(config, out);
    else if (*featurize) cmd_featurize(config, out, force);
    else if (*train) cmd_train(config, out);
    else if (*evaluate_cmd) cmd_evaluate(config, out);
    else if (*report) cmd_report(config, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace prognos::cli

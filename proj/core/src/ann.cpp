#include "prognos/ann.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "prognos/errors.hpp"
#include "prognos/random.hpp"

namespace prognos {
namespace {

struct Activations {
  Matrix z1, h1, z2, h2, out;  // out: raw head values (pre-sigmoid)
};

// out = x * w^T + b, written as row-wise axpy over the transposed weights.
Matrix dense(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  const Matrix wt = w.transposed();  // fan_in x fan_out
  Matrix out(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    std::copy(b.begin(), b.end(), dst.begin());
    const auto src = x.row(i);
    for (std::size_t k = 0; k < src.size(); ++k) {
      const double xk = src[k];
      if (xk == 0.0) continue;
      const auto wk = wt.row(k);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += xk * wk[j];
    }
  }
  return out;
}

Matrix relu(const Matrix& z) {
  Matrix h = z;
  for (auto& v : h.data()) v = v > 0.0 ? v : 0.0;
  return h;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Activations run_forward(const ModelParams& params, const Matrix& x) {
  if (x.cols() != params.input_width()) {
    throw DataError("network expects " + std::to_string(params.input_width()) +
                    " input columns, got " + std::to_string(x.cols()));
  }
  Activations a;
  a.z1 = dense(x, params.w1, params.b1);
  a.h1 = relu(a.z1);
  a.z2 = dense(a.h1, params.w2, params.b2);
  a.h2 = relu(a.z2);
  a.out = dense(a.h2, params.w3, params.b3);
  for (const double v : a.out.data()) {
    if (!std::isfinite(v)) throw NumericError("non-finite network output");
  }
  return a;
}

PredictionBatch to_batch(const Matrix& out, LossKind kind) {
  PredictionBatch batch;
  batch.class_probs = Matrix(out.rows(), kNumClassHeads);
  batch.rul_pred.resize(out.rows());
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < kNumClassHeads; ++j) {
      batch.class_probs(i, j) = kind == LossKind::kComposite ? sigmoid(out(i, j)) : out(i, j);
    }
    batch.rul_pred[i] = out(i, kNumClassHeads);
  }
  return batch;
}

// grad_w += delta^T * input, grad_b += column sums of delta.
void accumulate_dense_grad(const Matrix& delta, const Matrix& input, Matrix& grad_w,
                           std::vector<double>& grad_b) {
  for (std::size_t i = 0; i < delta.rows(); ++i) {
    const auto d = delta.row(i);
    const auto in = input.row(i);
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double dj = d[j];
      if (dj == 0.0) continue;
      grad_b[j] += dj;
      auto gw = grad_w.row(j);
      for (std::size_t k = 0; k < in.size(); ++k) gw[k] += dj * in[k];
    }
  }
}

// (delta * w) masked by the ReLU derivative of the layer below.
Matrix backprop_through(const Matrix& delta, const Matrix& w, const Matrix& z_below) {
  Matrix out(delta.rows(), w.cols());
  for (std::size_t i = 0; i < delta.rows(); ++i) {
    auto dst = out.row(i);
    const auto d = delta.row(i);
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double dj = d[j];
      if (dj == 0.0) continue;
      const auto wj = w.row(j);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += dj * wj[k];
    }
    const auto z = z_below.row(i);
    for (std::size_t k = 0; k < dst.size(); ++k)
      if (!(z[k] > 0.0)) dst[k] = 0.0;
  }
  return out;
}

Matrix mse_targets(const LabelBatch& labels, double label_scale) {
  Matrix t(labels.size(), kNumOutputs);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < kNumClassHeads; ++j) t(i, j) = labels.classes(i, j) * label_scale;
    t(i, kNumClassHeads) = labels.rul[i];
  }
  return t;
}

void init_glorot(Matrix& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (auto& v : w.data()) v = rng.uniform(-bound, bound);
}

}  // namespace

std::string_view to_string(LossKind kind) {
  return kind == LossKind::kComposite ? "composite" : "mse";
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "composite") return LossKind::kComposite;
  if (text == "mse") return LossKind::kMse;
  throw ConfigError("unknown loss '" + std::string(text) + "' (expected composite|mse)");
}

std::size_t ModelParams::parameter_count() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
}

std::array<std::span<double>, 6> ModelParams::tensors() {
  return {std::span<double>(w1.data()), std::span<double>(b1), std::span<double>(w2.data()),
          std::span<double>(b2), std::span<double>(w3.data()), std::span<double>(b3)};
}

std::array<std::span<const double>, 6> ModelParams::tensors() const {
  return {std::span<const double>(w1.data()), std::span<const double>(b1),
          std::span<const double>(w2.data()), std::span<const double>(b2),
          std::span<const double>(w3.data()), std::span<const double>(b3)};
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  z.w1 = Matrix(w1.rows(), w1.cols());
  z.b1.assign(b1.size(), 0.0);
  z.w2 = Matrix(w2.rows(), w2.cols());
  z.b2.assign(b2.size(), 0.0);
  z.w3 = Matrix(w3.rows(), w3.cols());
  z.b3.assign(b3.size(), 0.0);
  return z;
}

void validate(const TrainConfig& config) {
  if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(config.label_scale > 0.0)) throw ConfigError("train: label_scale must be positive");
  if (!(config.adam.step_size > 0.0)) throw ConfigError("train: Adam step size must be positive");
  validate(config.loss_config);
}

ModelParams init_network(std::size_t p, std::uint64_t seed) {
  if (p < 1) throw ConfigError("init_network: input width must be >= 1");
  Rng rng(seed);
  ModelParams params;
  params.w1 = Matrix(kHidden1, p);
  params.w2 = Matrix(kHidden2, kHidden1);
  params.w3 = Matrix(kNumOutputs, kHidden2);
  init_glorot(params.w1, rng);
  init_glorot(params.w2, rng);
  init_glorot(params.w3, rng);
  params.b1.assign(kHidden1, 0.0);
  params.b2.assign(kHidden2, 0.0);
  params.b3.assign(kNumOutputs, 0.0);
  return params;
}

PredictionBatch forward(const ModelParams& params, const Matrix& x, LossKind kind) {
  return to_batch(run_forward(params, x).out, kind);
}

LossAndGradient loss_and_gradient(const ModelParams& params, const Matrix& x,
                                  const LabelBatch& labels, const TrainConfig& config) {
  const Activations a = run_forward(params, x);
  const std::size_t n = x.rows();
  Matrix delta(n, kNumOutputs);  // dL/d(raw head values)
  LossAndGradient result;

  if (config.loss == LossKind::kComposite) {
    const PredictionBatch preds = to_batch(a.out, LossKind::kComposite);
    result.loss = composite_loss(labels, preds, config.loss_config);
    const LossGradient g = composite_loss_grad(labels, preds, config.loss_config);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < kNumClassHeads; ++j) {
        const double p = preds.class_probs(i, j);
        delta(i, j) = g.d_class_probs(i, j) * p * (1.0 - p);
      }
      delta(i, kNumClassHeads) = g.d_rul_pred[i];
    }
  } else {
    const Matrix targets = mse_targets(labels, config.label_scale);
    const double inv = 1.0 / static_cast<double>(targets.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const double d = a.out.data()[k] - targets.data()[k];
      sum += d * d;
      delta.data()[k] = 2.0 * d * inv;
    }
    result.loss = sum * inv;
  }

  result.grad = params.zeros_like();
  accumulate_dense_grad(delta, a.h2, result.grad.w3, result.grad.b3);
  const Matrix delta2 = backprop_through(delta, params.w3, a.z2);
  accumulate_dense_grad(delta2, a.h1, result.grad.w2, result.grad.b2);
  const Matrix delta1 = backprop_through(delta2, params.w2, a.z1);
  accumulate_dense_grad(delta1, x, result.grad.w1, result.grad.b1);
  return result;
}

TrainResult train(const Matrix& x, std::span<const LabelVector> labels,
                  const TrainConfig& config) {
  validate(config);
  if (x.rows() < 2) throw DataError("train: need at least 2 samples");
  if (x.rows() != labels.size()) throw DataError("train: feature/label count mismatch");
  const LabelBatch batch = make_label_batch(labels);

  TrainResult result;
  result.params = init_network(x.cols(), config.seed);
  result.loss_history.reserve(static_cast<std::size_t>(config.epochs));
  ModelParams first_moment = result.params.zeros_like();
  ModelParams second_moment = result.params.zeros_like();
  const AdamConfig& adam = config.adam;
  double beta1_power = 1.0;
  double beta2_power = 1.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    LossAndGradient step;
    try {
      step = loss_and_gradient(result.params, x, batch, config);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(step.loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": non-finite loss");
    }
    result.loss_history.push_back(step.loss);

    beta1_power *= adam.beta1;
    beta2_power *= adam.beta2;
    const double correction1 = 1.0 - beta1_power;
    const double correction2 = 1.0 - beta2_power;
    auto params = result.params.tensors();
    auto grads = step.grad.tensors();
    auto m = first_moment.tensors();
    auto v = second_moment.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t k = 0; k < params[t].size(); ++k) {
        const double g = grads[t][k];
        m[t][k] = adam.beta1 * m[t][k] + (1.0 - adam.beta1) * g;
        v[t][k] = adam.beta2 * v[t][k] + (1.0 - adam.beta2) * g * g;
        const double m_hat = m[t][k] / correction1;
        const double v_hat = v[t][k] / correction2;
        params[t][k] -= adam.step_size * m_hat / (std::sqrt(v_hat) + adam.epsilon);
      }
    }
  }
  return result;
}

PredictionBatch predict(const ModelParams& params, const Matrix& x, const TrainConfig& config) {
  PredictionBatch batch = forward(params, x, config.loss);
  if (config.rul_rectify) {
    for (auto& r : batch.rul_pred) r = std::max(0.0, r);
  }
  if (config.loss == LossKind::kMse) {
    for (auto& s : batch.class_probs.data()) s /= config.label_scale;
  }
  return batch;
}

std::string ann_to_json(const ModelParams& params, const TrainConfig& config,
                        const std::string& schema_hash) {
  detail::Json doc;
  doc["kind"] = "ann";
  doc["schema_hash"] = schema_hash;
  detail::Json cfg;
  cfg["epochs"] = config.epochs;
  cfg["loss"] = std::string(to_string(config.loss));
  cfg["gamma"] = config.loss_config.gamma;
  cfg["label_scale"] = config.label_scale;
  cfg["seed"] = config.seed;
  cfg["rul_rectify"] = config.rul_rectify;
  cfg["adam"] = {{"step_size", config.adam.step_size},
                 {"beta1", config.adam.beta1},
                 {"beta2", config.adam.beta2},
                 {"epsilon", config.adam.epsilon}};
  doc["config"] = cfg;
  auto layers = detail::Json::array();
  const std::array<std::pair<const Matrix*, const std::vector<double>*>, 3> dense_layers = {
      {{&params.w1, &params.b1}, {&params.w2, &params.b2}, {&params.w3, &params.b3}}};
  for (const auto& [w, b] : dense_layers) {
    detail::Json layer;
    layer["weights"] = detail::matrix_to_json(*w);
    layer["bias"] = *b;
    layers.push_back(layer);
  }
  doc["layers"] = layers;
  return doc.dump(1) + "\n";
}

AnnArtifact ann_from_json(std::string_view text) {
  const auto doc = detail::parse_json(text, "ann model");
  AnnArtifact art;
  try {
    if (doc.at("kind") != "ann") throw DataError("model file is not an ann model");
    art.schema_hash = doc.at("schema_hash").get<std::string>();
    const auto& cfg = doc.at("config");
    art.config.epochs = cfg.at("epochs").get<int>();
    art.config.loss = parse_loss_kind(cfg.at("loss").get<std::string>());
    art.config.loss_config.gamma = cfg.at("gamma").get<double>();
    art.config.label_scale = cfg.at("label_scale").get<double>();
    art.config.seed = cfg.at("seed").get<std::uint64_t>();
    art.config.rul_rectify = cfg.at("rul_rectify").get<bool>();
    art.config.adam.step_size = cfg.at("adam").at("step_size").get<double>();
    art.config.adam.beta1 = cfg.at("adam").at("beta1").get<double>();
    art.config.adam.beta2 = cfg.at("adam").at("beta2").get<double>();
    art.config.adam.epsilon = cfg.at("adam").at("epsilon").get<double>();
    const auto& layers = doc.at("layers");
    if (layers.size() != 3) throw DataError("ann model: expected 3 layers");
    art.params.w1 = detail::matrix_from_json(layers[0].at("weights"), "layer 1");
    art.params.b1 = layers[0].at("bias").get<std::vector<double>>();
    art.params.w2 = detail::matrix_from_json(layers[1].at("weights"), "layer 2");
    art.params.b2 = layers[1].at("bias").get<std::vector<double>>();
    art.params.w3 = detail::matrix_from_json(layers[2].at("weights"), "layer 3");
    art.params.b3 = layers[2].at("bias").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("ann model: ") + e.what());
  }
  const auto& p = art.params;
  if (p.w1.rows() != kHidden1 || p.b1.size() != kHidden1 || p.w2.rows() != kHidden2 ||
      p.w2.cols() != kHidden1 || p.b2.size() != kHidden2 || p.w3.rows() != kNumOutputs ||
      p.w3.cols() != kHidden2 || p.b3.size() != kNumOutputs) {
    throw DataError("ann model: unexpected layer shapes");
  }
  return art;
}

}  // namespace prognos

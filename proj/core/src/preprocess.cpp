#include "prognos/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json_util.hpp"
#include "prognos/errors.hpp"

namespace prognos {
namespace {

void require_finite(const Matrix& x, const char* what) {
  for (const double v : x.data()) {
    if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite entry");
  }
}

double max_abs(const Matrix& m) {
  double out = 0.0;
  for (const double v : m.data()) out = std::max(out, std::abs(v));
  return out;
}

void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = a(p, k) = c * akp - s * akq;
    a(k, q) = a(q, k) = s * akp + c * akq;
  }
  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = a(q, p) = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

double max_off_diagonal(const Matrix& a) {
  double off = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) off = std::max(off, std::abs(a(i, j)));
  return off;
}

}  // namespace

MinMaxParams fit_minmax(const Matrix& x) {
  if (x.rows() == 0) throw DataError("fit_minmax: empty matrix");
  require_finite(x, "fit_minmax");
  MinMaxParams params;
  const auto first = x.row(0);
  params.min.assign(first.begin(), first.end());
  params.max.assign(first.begin(), first.end());
  for (std::size_t i = 1; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      params.min[j] = std::min(params.min[j], row[j]);
      params.max[j] = std::max(params.max[j], row[j]);
    }
  }
  return params;
}

Matrix apply_minmax(const MinMaxParams& params, const Matrix& x) {
  if (x.cols() != params.min.size()) {
    throw DataError("apply_minmax: expected " + std::to_string(params.min.size()) +
                    " columns, got " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto src = x.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) {
      const double range = params.max[j] - params.min[j];
      dst[j] = range > 0.0 ? (src[j] - params.min[j]) / range : 0.0;
    }
  }
  return out;
}

SymmetricEigen symmetric_eig(const Matrix& q) {
  const std::size_t n = q.rows();
  if (q.cols() != n) throw DataError("symmetric_eig: matrix is not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(q(i, j) - q(j, i)) > 1e-10) {
        throw DataError("symmetric_eig: matrix is not symmetric at (" + std::to_string(i) +
                        ", " + std::to_string(j) + ")");
      }

  Matrix a = q;
  // Work on the exactly symmetrised copy.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (q(i, j) + q(j, i));
  Matrix v = Matrix::identity(n);
  const double threshold =
      kJacobiTolerance * std::max(max_abs(a), std::numeric_limits<double>::min());

  int sweeps = 0;
  while (max_off_diagonal(a) > threshold) {
    if (sweeps == kJacobiMaxSweeps) {
      throw NumericError("symmetric_eig: no convergence after " +
                         std::to_string(kJacobiMaxSweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t r = p + 1; r < n; ++r)
        if (a(p, r) != 0.0) rotate(a, v, p, r);
    ++sweeps;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymmetricEigen out;
  out.sweeps = sweeps;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t src = order[col];
    out.values[col] = a(src, src);
    std::size_t pivot = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(pivot, src))) pivot = k;
    const double sign = v(pivot, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, col) = sign * v(k, src);
  }
  return out;
}

std::string_view to_string(PcaMode mode) {
  return mode == PcaMode::kLiteral ? "literal" : "standardized";
}

PcaMode parse_pca_mode(std::string_view text) {
  if (text == "literal") return PcaMode::kLiteral;
  if (text == "standardized") return PcaMode::kStandardized;
  throw ConfigError("unknown pca_mode '" + std::string(text) + "' (expected literal|standardized)");
}

PcaTransform PcaTransform::identity(std::size_t p) {
  PcaTransform t;
  t.vectors = Matrix::identity(p);
  t.values.assign(p, 1.0);
  return t;
}

Matrix correlation_matrix(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  std::vector<double> mean(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < p; ++j) mean[j] += row[j];
  }
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<bool> constant(p, true);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (x(i, j) != x(0, j)) constant[j] = false;

  Matrix cov(p, p);
  std::vector<double> centered(p);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < p; ++j) centered[j] = row[j] - mean[j];
    for (std::size_t j = 0; j < p; ++j) {
      const double cj = centered[j];
      auto dst = cov.row(j);
      for (std::size_t k = j; k < p; ++k) dst[k] += cj * centered[k];
    }
  }

  Matrix corr(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    corr(j, j) = 1.0;
    if (constant[j]) continue;
    for (std::size_t k = j + 1; k < p; ++k) {
      if (constant[k]) continue;
      const double r = cov(j, k) / std::sqrt(cov(j, j) * cov(k, k));
      corr(j, k) = corr(k, j) = std::clamp(r, -1.0, 1.0);
    }
  }
  return corr;
}

PcaTransform fit_pca(const Matrix& xbar, PcaMode mode) {
  if (xbar.rows() < 2) throw DataError("fit_pca: need at least 2 rows");
  require_finite(xbar, "fit_pca");
  const auto eig = symmetric_eig(correlation_matrix(xbar));

  PcaTransform t;
  t.vectors = eig.vectors;
  t.values = eig.values;
  for (auto& lambda : t.values) lambda = std::max(lambda, 0.0);
  t.mode = mode;
  if (mode == PcaMode::kStandardized) {
    const std::size_t n = xbar.rows();
    const std::size_t p = xbar.cols();
    t.mean.assign(p, 0.0);
    t.stddev.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) t.mean[j] += xbar(i, j);
    for (auto& m : t.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        const double d = xbar(i, j) - t.mean[j];
        t.stddev[j] += d * d;
      }
    for (std::size_t j = 0; j < p; ++j) {
      bool constant = true;
      for (std::size_t i = 1; i < n && constant; ++i) constant = xbar(i, j) == xbar(0, j);
      t.stddev[j] = constant ? 0.0 : std::sqrt(t.stddev[j] / static_cast<double>(n - 1));
    }
  }
  return t;
}

Matrix apply_pca(const PcaTransform& transform, const Matrix& xbar) {
  const std::size_t p = transform.vectors.rows();
  if (xbar.cols() != p) {
    throw DataError("apply_pca: expected " + std::to_string(p) + " columns, got " +
                    std::to_string(xbar.cols()));
  }
  if (transform.mode == PcaMode::kLiteral) return matmul(xbar, transform.vectors);

  Matrix z(xbar.rows(), p);
  for (std::size_t i = 0; i < xbar.rows(); ++i)
    for (std::size_t j = 0; j < p; ++j)
      z(i, j) = transform.stddev[j] > 0.0
                    ? (xbar(i, j) - transform.mean[j]) / transform.stddev[j]
                    : 0.0;
  return matmul(z, transform.vectors);
}

FeatureTransform fit_feature_transform(const Matrix& train, bool pca_enabled, PcaMode mode,
                                       std::string schema_hash) {
  FeatureTransform t;
  t.minmax = fit_minmax(train);
  t.pca_enabled = pca_enabled;
  t.pca = pca_enabled ? fit_pca(apply_minmax(t.minmax, train), mode)
                      : PcaTransform::identity(train.cols());
  t.schema_hash = std::move(schema_hash);
  return t;
}

Matrix apply_feature_transform(const FeatureTransform& transform, const Matrix& x) {
  Matrix scaled = apply_minmax(transform.minmax, x);
  if (!transform.pca_enabled) return scaled;
  return apply_pca(transform.pca, scaled);
}

std::string feature_transform_to_json(const FeatureTransform& t) {
  detail::Json doc;
  doc["kind"] = "feature_transform";
  doc["schema_hash"] = t.schema_hash;
  doc["minmax"] = {{"min", t.minmax.min}, {"max", t.minmax.max}};
  detail::Json pca;
  pca["enabled"] = t.pca_enabled;
  pca["mode"] = std::string(to_string(t.pca.mode));
  pca["eigenvalues"] = t.pca.values;
  pca["eigenvectors"] = detail::matrix_to_json(t.pca.vectors);
  pca["mean"] = t.pca.mean;
  pca["stddev"] = t.pca.stddev;
  doc["pca"] = pca;
  return doc.dump(1) + "\n";
}

FeatureTransform feature_transform_from_json(std::string_view text) {
  const auto doc = detail::parse_json(text, "feature transform");
  FeatureTransform t;
  try {
    if (doc.at("kind") != "feature_transform") throw DataError("not a feature transform file");
    t.schema_hash = doc.at("schema_hash").get<std::string>();
    t.minmax.min = doc.at("minmax").at("min").get<std::vector<double>>();
    t.minmax.max = doc.at("minmax").at("max").get<std::vector<double>>();
    const auto& pca = doc.at("pca");
    t.pca_enabled = pca.at("enabled").get<bool>();
    t.pca.mode = parse_pca_mode(pca.at("mode").get<std::string>());
    t.pca.values = pca.at("eigenvalues").get<std::vector<double>>();
    t.pca.vectors = detail::matrix_from_json(pca.at("eigenvectors"), "pca eigenvectors");
    t.pca.mean = pca.at("mean").get<std::vector<double>>();
    t.pca.stddev = pca.at("stddev").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("feature transform: ") + e.what());
  }
  const std::size_t p = t.minmax.min.size();
  if (t.minmax.max.size() != p || t.pca.vectors.rows() != p || t.pca.vectors.cols() != p) {
    throw DataError("feature transform: inconsistent dimensions");
  }
  return t;
}

}  // namespace prognos

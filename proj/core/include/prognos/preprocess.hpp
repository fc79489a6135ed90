#pragma once

// Min-max normalisation and PCA orthogonalisation. Both are fitted on the
// training split only and then applied unchanged to any other split.

#include <string>
#include <string_view>
#include <vector>

#include "prognos/matrix.hpp"

namespace prognos {

struct MinMaxParams {
  std::vector<double> min;
  std::vector<double> max;

  friend bool operator==(const MinMaxParams&, const MinMaxParams&) = default;
};

// Columnwise min and max. Throws DataError on an empty or non-finite matrix.
MinMaxParams fit_minmax(const Matrix& x);

// (x - min) / (max - min), 0 for zero-range columns. Values outside the
// training range are not clipped.
Matrix apply_minmax(const MinMaxParams& params, const Matrix& x);

struct SymmetricEigen {
  Matrix vectors;              // column i is the eigenvector of values[i]
  std::vector<double> values;  // descending
  int sweeps = 0;
};

inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr double kJacobiTolerance = 1e-12;

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Iterates until the
// largest off-diagonal magnitude is at most kJacobiTolerance * max|Q|.
// Eigenvalues are sorted descending (stable on ties); each eigenvector is
// signed so its largest-magnitude entry (lowest index on ties) is positive.
// Throws DataError for non-square or non-symmetric input (tolerance 1e-10)
// and NumericError if kJacobiMaxSweeps sweeps do not converge.
SymmetricEigen symmetric_eig(const Matrix& q);

enum class PcaMode { kLiteral, kStandardized };

std::string_view to_string(PcaMode mode);
PcaMode parse_pca_mode(std::string_view text);

struct PcaTransform {
  Matrix vectors;
  std::vector<double> values;  // clamped to >= 0
  PcaMode mode = PcaMode::kLiteral;
  // Standardized mode only: column means and sample standard deviations;
  // zero-variance columns have stddev 0 and project as 0.
  std::vector<double> mean;
  std::vector<double> stddev;

  static PcaTransform identity(std::size_t p);

  friend bool operator==(const PcaTransform&, const PcaTransform&) = default;
};

// Sample correlation of the columns of x. Zero-variance columns get a unit
// diagonal and zero off-diagonals.
Matrix correlation_matrix(const Matrix& x);

// Keeps all p components. Throws DataError when x has fewer than 2 rows.
PcaTransform fit_pca(const Matrix& xbar, PcaMode mode = PcaMode::kLiteral);

// Literal: xbar * V. Standardized: ((xbar - mean) / stddev) * V.
Matrix apply_pca(const PcaTransform& transform, const Matrix& xbar);

// The fitted preprocessing chain, stamped with the feature schema hash.
struct FeatureTransform {
  MinMaxParams minmax;
  bool pca_enabled = true;
  PcaTransform pca;
  std::string schema_hash;

  friend bool operator==(const FeatureTransform&, const FeatureTransform&) = default;
};

FeatureTransform fit_feature_transform(const Matrix& train, bool pca_enabled, PcaMode mode,
                                       std::string schema_hash);

// Throws DataError on column-count mismatch.
Matrix apply_feature_transform(const FeatureTransform& transform, const Matrix& x);

std::string feature_transform_to_json(const FeatureTransform& transform);
FeatureTransform feature_transform_from_json(std::string_view text);

}  // namespace prognos

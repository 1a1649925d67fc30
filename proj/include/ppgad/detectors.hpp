#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ppgad::detectors {

// Feature matrices hold one sample per row.
using Matrix = Eigen::MatrixXd;

// Builds a sample matrix from row vectors of equal length.
Matrix to_matrix(const std::vector<std::vector<double>>& rows);

// Every score below follows the same orientation: higher = more anomalous.

// ---------------------------------------------------------------------------
// Multivariate normal density.

struct MvnModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // maximum-likelihood estimate + regularization * I
  Eigen::MatrixXd cholesky;    // lower factor L, covariance = L L^T
  double log_det = 0.0;
  double regularization = 0.0;
};

// Mean and covariance of the rows; the covariance diagonal is lifted by
// 1e-6 * trace / d. Throws FitError for fewer than 2 rows or zero variance.
MvnModel fit_mvn(const Matrix& samples);

// Negative log-density -log p(h) under the fitted Gaussian.
double score_mvn(const MvnModel& model, std::span<const double> h);

// ---------------------------------------------------------------------------
// Isolation forest.

struct IsolationNode {
  int feature = -1;  // -1 marks a leaf
  double split = 0.0;
  int left = -1;   // samples with value < split
  int right = -1;  // samples with value >= split
  std::size_t size = 0;  // training samples that reached this node
};

// Nodes in depth-first pre-order; the root is nodes[0].
struct IsolationTree {
  std::vector<IsolationNode> nodes;
};

struct IForestModel {
  std::vector<IsolationTree> trees;
  std::size_t subsample_size = 0;
  std::size_t max_depth = 0;
  std::size_t dim = 0;
  double c_n = 0.0;  // c(subsample_size)
  std::uint64_t seed = 0;
};

inline constexpr double kEulerGamma = 0.5772156649015329;

// H(i) ~ ln(i) + Euler-Mascheroni constant.
double harmonic_approx(double i);

// Average path length of an unsuccessful binary-search-tree lookup among n
// points: 2 H(n-1) - 2 (n-1) / n, and 0 for n <= 1.
double average_path_length(std::size_t n);

// Tree t draws from the stream Rng::derive(seed, t): first the subsample
// (partial Fisher-Yates over row indices), then, depth-first, a feature
// chosen uniformly among those not constant in the node followed by a split
// uniform inside that feature's range. A node becomes a leaf when it holds
// one sample, only duplicates, or reaches depth ceil(log2(subsample)).
IForestModel fit_iforest(const Matrix& samples, std::uint64_t seed, std::size_t n_trees = 100,
                         std::size_t subsample = 256);

// Edges to the leaf plus c(leaf size).
double path_length(const IsolationTree& tree, std::span<const double> h);
double expected_path_length(const IForestModel& model, std::span<const double> h);

// 2^(-E[L] / c(N)).
double iforest_score_from_path(double expected_path, double c_n);
double score_iforest(const IForestModel& model, std::span<const double> h);

// ---------------------------------------------------------------------------
// PCA reconstruction error.

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;          // d x k, orthonormal columns
  Eigen::VectorXd eigenvalues;         // all d, descending
  double variance_threshold = 0.99;
};

// Keeps the fewest leading components whose cumulative explained variance
// reaches the threshold. Each component's largest-magnitude entry is made
// positive. Throws FitError for fewer than 2 rows or zero total variance.
PcaModel fit_pca(const Matrix& samples, double variance_threshold = 0.99);

// Squared norm of (h - mean) minus its projection onto the kept subspace.
double score_pca(const PcaModel& model, std::span<const double> h);

// ---------------------------------------------------------------------------
// Unified interface.

enum class DetectorKind { Mvn, IForest, Pca };

std::string to_string(DetectorKind kind);
// Accepts "mvn", "iforest", "pca" (case-insensitive). Throws ConfigError.
DetectorKind parse_detector_kind(std::string_view text);

struct DetectorSettings {
  DetectorKind kind = DetectorKind::Mvn;
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
  double variance_threshold = 0.99;
  std::uint64_t seed = 0;
};

using DetectorModel = std::variant<MvnModel, IForestModel, PcaModel>;

DetectorModel fit_detector(const DetectorSettings& settings, const Matrix& samples);
DetectorKind kind_of(const DetectorModel& model);
std::size_t input_dim(const DetectorModel& model);
double score(const DetectorModel& model, std::span<const double> h);
std::vector<double> score_rows(const DetectorModel& model, const Matrix& samples);

// JSON container: kind tag, every parameter as a float64, fit seed and
// library version. Parsing restores the model bit-exactly.
struct StoredDetector {
  DetectorModel model;
  std::uint64_t seed = 0;
  std::string version;
};

std::string serialize_detector(const DetectorModel& model, std::uint64_t seed);
StoredDetector deserialize_detector(const std::string& text);

// ---------------------------------------------------------------------------
// Evaluation.

// Area under the ROC curve with the anomalous set as the positive class:
// P(anomalous > normal) + 0.5 P(tie), computed from mid-ranks. Throws
// EvaluationError when either set is empty.
double auc(std::span<const double> normal, std::span<const double> anomalous);

}  // namespace ppgad::detectors

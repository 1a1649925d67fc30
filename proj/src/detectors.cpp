#include "ppgad/detectors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "ppgad/error.hpp"
#include "ppgad/rng.hpp"
#include "ppgad/version.hpp"

namespace ppgad::detectors {

namespace {

void check_dim(std::size_t expected, std::size_t got, const char* who) {
  if (expected != got) {
    throw ContractViolation(std::string(who) + ": model has dimension " + std::to_string(expected) +
                            ", sample has " + std::to_string(got));
  }
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> h) {
  return {h.data(), static_cast<Eigen::Index>(h.size())};
}

void check_fit_input(const Matrix& samples, const char* who) {
  if (samples.rows() < 2) {
    throw FitError(std::string(who) + ": need at least 2 training samples, got " +
                   std::to_string(samples.rows()));
  }
  if (samples.cols() < 1) throw FitError(std::string(who) + ": samples have no features");
  if (!samples.allFinite()) throw FitError(std::string(who) + ": non-finite training sample");
}

Eigen::MatrixXd ml_covariance(const Matrix& samples, const Eigen::VectorXd& mean) {
  const Matrix centered = samples.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(samples.rows());
}

}  // namespace

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  const std::size_t d = rows.front().size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    check_dim(d, rows[r].size(), "to_matrix");
    for (std::size_t c = 0; c < d; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// MVN

MvnModel fit_mvn(const Matrix& samples) {
  check_fit_input(samples, "fit_mvn");
  MvnModel m;
  const auto d = samples.cols();
  m.mean = samples.colwise().mean().transpose();
  m.covariance = ml_covariance(samples, m.mean);
  const double trace = m.covariance.trace();
  if (!(trace > 0.0)) throw FitError("fit_mvn: training samples have zero variance");
  m.regularization = 1e-6 * trace / static_cast<double>(d);
  m.covariance.diagonal().array() += m.regularization;

  Eigen::LLT<Eigen::MatrixXd> llt(m.covariance);
  if (llt.info() != Eigen::Success) {
    throw FitError("fit_mvn: covariance is not positive definite after regularization");
  }
  m.cholesky = llt.matrixL();
  m.log_det = 2.0 * m.cholesky.diagonal().array().log().sum();
  return m;
}

double score_mvn(const MvnModel& model, std::span<const double> h) {
  check_dim(static_cast<std::size_t>(model.mean.size()), h.size(), "score_mvn");
  const Eigen::VectorXd diff = as_vector(h) - model.mean;
  const Eigen::VectorXd z = model.cholesky.triangularView<Eigen::Lower>().solve(diff);
  const double d = static_cast<double>(model.mean.size());
  return 0.5 * z.squaredNorm() + 0.5 * model.log_det + 0.5 * d * std::log(2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Isolation forest

double harmonic_approx(double i) { return std::log(i) + kEulerGamma; }

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  const double nn = static_cast<double>(n);
  return 2.0 * harmonic_approx(nn - 1.0) - 2.0 * (nn - 1.0) / nn;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::size_t max_depth, Rng& rng)
      : x_(x), max_depth_(max_depth), rng_(rng) {}

  IsolationTree build(std::vector<Eigen::Index> rows) {
    IsolationTree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  int grow(IsolationTree& tree, std::vector<Eigen::Index>& rows, std::size_t depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[static_cast<std::size_t>(id)].size = rows.size();
    if (rows.size() <= 1 || depth >= max_depth_) return id;

    // Features that still vary inside this node.
    std::vector<Eigen::Index> candidates;
    std::vector<std::pair<double, double>> ranges;
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      double lo = x_(rows.front(), f);
      double hi = lo;
      for (Eigen::Index r : rows) {
        lo = std::min(lo, x_(r, f));
        hi = std::max(hi, x_(r, f));
      }
      if (hi > lo) {
        candidates.push_back(f);
        ranges.emplace_back(lo, hi);
      }
    }
    if (candidates.empty()) return id;  // only duplicates left

    const std::size_t pick = rng_.below(candidates.size());
    const Eigen::Index feature = candidates[pick];
    const auto [lo, hi] = ranges[pick];
    double split = lo + rng_.uniform_open() * (hi - lo);
    if (!(split > lo)) split = hi;

    std::vector<Eigen::Index> left;
    std::vector<Eigen::Index> right;
    for (Eigen::Index r : rows) (x_(r, feature) < split ? left : right).push_back(r);

    const int l = grow(tree, left, depth + 1);
    const int rr = grow(tree, right, depth + 1);
    IsolationNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(feature);
    node.split = split;
    node.left = l;
    node.right = rr;
    return id;
  }

  const Matrix& x_;
  std::size_t max_depth_;
  Rng& rng_;
};

}  // namespace

IForestModel fit_iforest(const Matrix& samples, std::uint64_t seed, std::size_t n_trees,
                         std::size_t subsample) {
  check_fit_input(samples, "fit_iforest");
  if (n_trees == 0) throw ConfigError("fit_iforest: need at least one tree");
  if (subsample < 2) throw ConfigError("fit_iforest: subsample size must be >= 2");

  IForestModel m;
  const auto n = static_cast<std::size_t>(samples.rows());
  m.subsample_size = std::min(subsample, n);
  m.max_depth = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(m.subsample_size))));
  m.dim = static_cast<std::size_t>(samples.cols());
  m.c_n = average_path_length(m.subsample_size);
  m.seed = seed;

  std::vector<Eigen::Index> all(n);
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
    std::vector<Eigen::Index> idx = all;
    for (std::size_t i = 0; i < m.subsample_size; ++i) {
      std::swap(idx[i], idx[i + rng.below(n - i)]);
    }
    idx.resize(m.subsample_size);
    TreeBuilder builder(samples, m.max_depth, rng);
    m.trees.push_back(builder.build(std::move(idx)));
  }
  return m;
}

double path_length(const IsolationTree& tree, std::span<const double> h) {
  std::size_t node = 0;
  double edges = 0.0;
  while (tree.nodes[node].feature >= 0) {
    const IsolationNode& nd = tree.nodes[node];
    node = static_cast<std::size_t>(h[static_cast<std::size_t>(nd.feature)] < nd.split ? nd.left
                                                                                       : nd.right);
    edges += 1.0;
  }
  return edges + average_path_length(tree.nodes[node].size);
}

double expected_path_length(const IForestModel& model, std::span<const double> h) {
  check_dim(model.dim, h.size(), "score_iforest");
  double total = 0.0;
  for (const auto& tree : model.trees) total += path_length(tree, h);
  return total / static_cast<double>(model.trees.size());
}

double iforest_score_from_path(double expected_path, double c_n) {
  return std::exp2(-expected_path / c_n);
}

double score_iforest(const IForestModel& model, std::span<const double> h) {
  return iforest_score_from_path(expected_path_length(model, h), model.c_n);
}

// ---------------------------------------------------------------------------
// PCA

PcaModel fit_pca(const Matrix& samples, double variance_threshold) {
  check_fit_input(samples, "fit_pca");
  if (!(variance_threshold > 0.0) || variance_threshold > 1.0) {
    throw ConfigError("fit_pca: variance threshold must be in (0, 1]");
  }
  PcaModel m;
  m.variance_threshold = variance_threshold;
  m.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd cov = ml_covariance(samples, m.mean);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw FitError("fit_pca: eigendecomposition failed");

  const auto d = cov.rows();
  m.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  const double total = m.eigenvalues.sum();
  if (!(total > 0.0)) throw FitError("fit_pca: training samples have zero variance");

  // Relative slack so that a threshold of 1.0 stops at the numerical rank.
  const double target = variance_threshold * total - 1e-12 * total;
  Eigen::Index k = 0;
  double cumulative = 0.0;
  while (k < d) {
    cumulative += m.eigenvalues(k);
    ++k;
    if (cumulative >= target) break;
  }

  m.components.resize(d, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    m.components.col(j) = v;
  }
  return m;
}

double score_pca(const PcaModel& model, std::span<const double> h) {
  check_dim(static_cast<std::size_t>(model.mean.size()), h.size(), "score_pca");
  const Eigen::VectorXd centered = as_vector(h) - model.mean;
  const Eigen::VectorXd residual =
      centered - model.components * (model.components.transpose() * centered);
  return residual.squaredNorm();
}

// ---------------------------------------------------------------------------
// Unified interface

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::Mvn:
      return "mvn";
    case DetectorKind::IForest:
      return "iforest";
    case DetectorKind::Pca:
      return "pca";
  }
  return "unknown";
}

DetectorKind parse_detector_kind(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "mvn") return DetectorKind::Mvn;
  if (s == "iforest" || s == "if") return DetectorKind::IForest;
  if (s == "pca") return DetectorKind::Pca;
  throw ConfigError("unknown detector '" + std::string(text) + "' (expected mvn, iforest or pca)");
}

DetectorModel fit_detector(const DetectorSettings& settings, const Matrix& samples) {
  switch (settings.kind) {
    case DetectorKind::Mvn:
      return fit_mvn(samples);
    case DetectorKind::IForest:
      return fit_iforest(samples, settings.seed, settings.n_trees, settings.subsample);
    case DetectorKind::Pca:
      return fit_pca(samples, settings.variance_threshold);
  }
  throw ConfigError("fit_detector: unknown detector kind");
}

DetectorKind kind_of(const DetectorModel& model) {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MvnModel>) return DetectorKind::Mvn;
        else if constexpr (std::is_same_v<T, IForestModel>) return DetectorKind::IForest;
        else return DetectorKind::Pca;
      },
      model);
}

std::size_t input_dim(const DetectorModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IForestModel>) return m.dim;
        else return static_cast<std::size_t>(m.mean.size());
      },
      model);
}

double score(const DetectorModel& model, std::span<const double> h) {
  return std::visit(
      [h](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MvnModel>) return score_mvn(m, h);
        else if constexpr (std::is_same_v<T, IForestModel>) return score_iforest(m, h);
        else return score_pca(m, h);
      },
      model);
}

std::vector<double> score_rows(const DetectorModel& model, const Matrix& samples) {
  std::vector<double> out(static_cast<std::size_t>(samples.rows()));
  std::vector<double> row(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < samples.cols(); ++c) row[static_cast<std::size_t>(c)] = samples(r, c);
    out[static_cast<std::size_t>(r)] = score(model, row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Column-major flattening with explicit shape.
json mat_json(const Eigen::MatrixXd& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Eigen::VectorXd vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd mat_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw IngestionError("detector matrix payload has the wrong size");
  }
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

}  // namespace

std::string serialize_detector(const DetectorModel& model, std::uint64_t seed) {
  json j = {{"format", "ppgad-detector"},
            {"version", kVersion},
            {"kind", to_string(kind_of(model))},
            {"seed", seed}};
  std::visit(
      [&j](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MvnModel>) {
          j["mean"] = vec_json(m.mean);
          j["covariance"] = mat_json(m.covariance);
          j["cholesky"] = mat_json(m.cholesky);
          j["log_det"] = m.log_det;
          j["regularization"] = m.regularization;
        } else if constexpr (std::is_same_v<T, IForestModel>) {
          j["subsample_size"] = m.subsample_size;
          j["max_depth"] = m.max_depth;
          j["dim"] = m.dim;
          j["c_n"] = m.c_n;
          j["fit_seed"] = m.seed;
          json trees = json::array();
          for (const auto& t : m.trees) {
            json nodes = json::array();
            for (const auto& nd : t.nodes) {
              nodes.push_back({nd.feature, nd.split, nd.left, nd.right, nd.size});
            }
            trees.push_back(std::move(nodes));
          }
          j["trees"] = std::move(trees);
        } else {
          j["mean"] = vec_json(m.mean);
          j["components"] = mat_json(m.components);
          j["eigenvalues"] = vec_json(m.eigenvalues);
          j["variance_threshold"] = m.variance_threshold;
        }
      },
      model);
  return j.dump();
}

StoredDetector deserialize_detector(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "ppgad-detector") throw IngestionError("not a ppgad detector file");
    StoredDetector out{MvnModel{}, j.at("seed").get<std::uint64_t>(),
                       j.at("version").get<std::string>()};
    switch (parse_detector_kind(j.at("kind").get<std::string>())) {
      case DetectorKind::Mvn: {
        MvnModel m;
        m.mean = vec_from(j.at("mean"));
        m.covariance = mat_from(j.at("covariance"));
        m.cholesky = mat_from(j.at("cholesky"));
        m.log_det = j.at("log_det").get<double>();
        m.regularization = j.at("regularization").get<double>();
        out.model = std::move(m);
        break;
      }
      case DetectorKind::IForest: {
        IForestModel m;
        m.subsample_size = j.at("subsample_size").get<std::size_t>();
        m.max_depth = j.at("max_depth").get<std::size_t>();
        m.dim = j.at("dim").get<std::size_t>();
        m.c_n = j.at("c_n").get<double>();
        m.seed = j.at("fit_seed").get<std::uint64_t>();
        for (const auto& tj : j.at("trees")) {
          IsolationTree t;
          for (const auto& nj : tj) {
            t.nodes.push_back({nj.at(0).get<int>(), nj.at(1).get<double>(), nj.at(2).get<int>(),
                               nj.at(3).get<int>(), nj.at(4).get<std::size_t>()});
          }
          m.trees.push_back(std::move(t));
        }
        out.model = std::move(m);
        break;
      }
      case DetectorKind::Pca: {
        PcaModel m;
        m.mean = vec_from(j.at("mean"));
        m.components = mat_from(j.at("components"));
        m.eigenvalues = vec_from(j.at("eigenvalues"));
        m.variance_threshold = j.at("variance_threshold").get<double>();
        out.model = std::move(m);
        break;
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed detector file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// AUC

double auc(std::span<const double> normal, std::span<const double> anomalous) {
  if (normal.empty() || anomalous.empty()) {
    throw EvaluationError("auc: need at least one normal and one anomalous score");
  }
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(normal.size() + anomalous.size());
  for (double s : normal) items.push_back({s, false});
  for (double s : anomalous) items.push_back({s, true});
  for (const auto& it : items) {
    if (std::isnan(it.score)) throw EvaluationError("auc: NaN score");
  }
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });

  // Twice the mid-rank of every tie group is an integer, so the rank sum
  // is exact.
  std::int64_t rank_sum2 = 0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i + 1;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const auto twice_mid = static_cast<std::int64_t>(i + 1 + j);
    for (std::size_t q = i; q < j; ++q) {
      if (items[q].positive) rank_sum2 += twice_mid;
    }
    i = j;
  }
  const auto n1 = static_cast<std::int64_t>(anomalous.size());
  const auto n0 = static_cast<std::int64_t>(normal.size());
  const std::int64_t u2 = rank_sum2 - n1 * (n1 + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n0) * static_cast<double>(n1));
}

}  // namespace ppgad::detectors

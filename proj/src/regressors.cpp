#include "domainrank/regressors.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "domainrank/errors.hpp"
#include "domainrank/parallel.hpp"
#include "domainrank/rng.hpp"

namespace domainrank {

Eigen::MatrixXd design_matrix(std::span<const Fingerprint> fps) {
  const auto n = static_cast<Eigen::Index>(fps.size());
  const Eigen::Index p = n > 0 ? fps[0].bits() : 0;
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      X(i, j) = fps[static_cast<std::size_t>(i)].test(static_cast<int>(j)) ? 1.0 : 0.0;
  return X;
}

namespace {

void fit_ridge(FittedModel& model, std::span<const Fingerprint> fps,
               const Eigen::VectorXd& y, double lambda) {
  const Eigen::MatrixXd X = design_matrix(fps);
  const Eigen::Index n = X.rows(), p = X.cols();

  const Eigen::RowVectorXd col_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - col_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::VectorXd w;
  if (lambda == 0.0) {
    w = Xc.colPivHouseholderQr().solve(yc);
  } else if (p <= n) {
    Eigen::MatrixXd A = Xc.transpose() * Xc;
    A.diagonal().array() += lambda;
    w = A.llt().solve(Xc.transpose() * yc);
  } else {
    // Dual form: w = Xc' (Xc Xc' + lambda I)^-1 yc.
    Eigen::MatrixXd G = Xc * Xc.transpose();
    G.diagonal().array() += lambda;
    w = Xc.transpose() * G.llt().solve(yc);
  }

  model.weights = w;
  model.intercept = y_mean - col_mean.dot(w);
}

struct TreeBuilder {
  std::span<const Fingerprint> fps;  // canonical order
  const Eigen::VectorXd& y;
  int p;
  int min_samples_split;
  int max_features;
  Rng& rng;
  std::vector<TreeNode> nodes;

  std::int32_t build(std::vector<std::int32_t>& idx) {
    const auto n = static_cast<double>(idx.size());
    double sum = 0.0, sumsq = 0.0;
    for (auto i : idx) {
      sum += y[i];
      sumsq += y[i] * y[i];
    }
    const double mean = sum / n;
    const double sse = sumsq - sum * sum / n;

    const auto node_id = static_cast<std::int32_t>(nodes.size());
    nodes.push_back({-1, -1, -1, mean});

    if (idx.size() < static_cast<std::size_t>(min_samples_split) || sse <= 1e-12)
      return node_id;

    // Candidate features, ascending so the lowest index wins equal-gain ties.
    std::vector<int> features;
    if (max_features > 0 && max_features < p) {
      std::vector<std::size_t> picked =
          rng.sample_indices(static_cast<std::size_t>(p),
                             static_cast<std::size_t>(max_features));
      features.assign(picked.begin(), picked.end());
      std::sort(features.begin(), features.end());
    } else {
      features.resize(static_cast<std::size_t>(p));
      std::iota(features.begin(), features.end(), 0);
    }

    int best_feature = -1;
    double best_score = -1.0;  // s0^2/n0 + s1^2/n1, maximized
    for (int f : features) {
      double s1 = 0.0;
      std::size_t n1 = 0;
      for (auto i : idx) {
        if (fps[static_cast<std::size_t>(i)].test(f)) {
          s1 += y[i];
          ++n1;
        }
      }
      const std::size_t n0 = idx.size() - n1;
      if (n0 == 0 || n1 == 0) continue;
      const double s0 = sum - s1;
      const double score = s0 * s0 / static_cast<double>(n0) +
                           s1 * s1 / static_cast<double>(n1);
      if (score > best_score) {
        best_score = score;
        best_feature = f;
      }
    }
    if (best_feature < 0) return node_id;  // all candidate features constant here

    std::vector<std::int32_t> left_idx, right_idx;
    left_idx.reserve(idx.size());
    for (auto i : idx) {
      if (fps[static_cast<std::size_t>(i)].test(best_feature))
        right_idx.push_back(i);
      else
        left_idx.push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    nodes[static_cast<std::size_t>(node_id)].feature = best_feature;
    const std::int32_t left = build(left_idx);
    nodes[static_cast<std::size_t>(node_id)].left = left;
    const std::int32_t right = build(right_idx);
    nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }
};

void fit_forest(FittedModel& model, std::span<const Fingerprint> fps,
                const Eigen::VectorXd& y, const RegressorSpec& spec) {
  const std::size_t n = fps.size();

  // Canonical row order (fingerprint bytes, then response) so the fit does not
  // depend on how the caller ordered the training rows.
  std::vector<std::int32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    const auto ba = fps[static_cast<std::size_t>(a)].bytes();
    const auto bb = fps[static_cast<std::size_t>(b)].bytes();
    if (const int c = std::memcmp(ba.data(), bb.data(), ba.size()); c != 0)
      return c < 0;
    return y[a] < y[b];
  });

  std::vector<Fingerprint> canon_fps;
  canon_fps.reserve(n);
  Eigen::VectorXd canon_y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    canon_fps.push_back(fps[static_cast<std::size_t>(order[i])]);
    canon_y[static_cast<Eigen::Index>(i)] = y[order[i]];
  }

  model.trees.resize(static_cast<std::size_t>(spec.n_trees));
  parallel_for(static_cast<std::size_t>(spec.n_trees), [&](std::size_t t) {
    Rng rng(derive_seed(spec.seed, "tree", t));
    std::vector<std::int32_t> idx(n);
    if (spec.bootstrap) {
      for (std::size_t i = 0; i < n; ++i)
        idx[i] = static_cast<std::int32_t>(rng.below(n));
      std::sort(idx.begin(), idx.end());
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    TreeBuilder builder{canon_fps, canon_y, model.n_bits, spec.min_samples_split,
                        spec.max_features, rng, {}};
    builder.build(idx);
    model.trees[t].nodes = std::move(builder.nodes);
  });
}

}  // namespace

double RegressionTree::predict(const Fingerprint& x) const {
  std::int32_t at = 0;
  for (;;) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    if (node.feature < 0) return node.value;
    at = x.test(node.feature) ? node.right : node.left;
  }
}

double FittedModel::predict(const Fingerprint& x) const {
  if (x.bits() != n_bits)
    throw DimensionError("prediction fingerprint length " + std::to_string(x.bits()) +
                         " does not match training length " + std::to_string(n_bits));
  if (spec.kind == RegressorKind::kRidge) {
    double acc = intercept;
    for (int j = 0; j < n_bits; ++j)
      if (x.test(j)) acc += weights[j];
    return acc;
  }
  double sum = 0.0;
  for (const auto& tree : trees) sum += tree.predict(x);
  return sum / static_cast<double>(trees.size());
}

FittedModel fit(const RegressorSpec& spec, std::span<const Fingerprint> X,
                const Eigen::VectorXd& y) {
  if (X.size() < 2 || static_cast<Eigen::Index>(X.size()) != y.size())
    throw DomainError("regression needs at least 2 rows with matching responses");
  const int p = X[0].bits();
  for (const auto& fp : X)
    if (fp.bits() != p) throw DimensionError("training fingerprints differ in length");

  FittedModel model;
  model.spec = spec;
  model.n_bits = p;
  if (spec.kind == RegressorKind::kRidge) {
    if (spec.ridge_lambda < 0.0) throw DomainError("ridge lambda must be >= 0");
    fit_ridge(model, X, y, spec.ridge_lambda);
  } else {
    if (spec.n_trees < 1) throw DomainError("forest needs at least 1 tree");
    if (spec.min_samples_split < 2)
      throw DomainError("min_samples_split must be >= 2");
    fit_forest(model, X, y, spec);
  }
  return model;
}

double predict(const FittedModel& model, const Fingerprint& x) {
  return model.predict(x);
}

static constexpr int kModelFormatVersion = 1;

std::string serialize_model(const FittedModel& model) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = model.spec.kind == RegressorKind::kRidge ? "ridge" : "random_forest";
  j["n_bits"] = model.n_bits;
  j["spec"] = {{"ridge_lambda", model.spec.ridge_lambda},
               {"n_trees", model.spec.n_trees},
               {"max_features", model.spec.max_features},
               {"min_samples_split", model.spec.min_samples_split},
               {"bootstrap", model.spec.bootstrap},
               {"seed", model.spec.seed}};
  if (model.spec.kind == RegressorKind::kRidge) {
    j["intercept"] = model.intercept;
    j["weights"] = std::vector<double>(model.weights.data(),
                                       model.weights.data() + model.weights.size());
  } else {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& node : tree.nodes)
        nodes.push_back({node.feature, node.left, node.right, node.value});
      trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
  }
  return j.dump();
}

FittedModel deserialize_model(const std::string& blob) {
  const nlohmann::json j = nlohmann::json::parse(blob);
  if (j.at("format_version").get<int>() != kModelFormatVersion)
    throw ConfigError("unsupported model format version");

  FittedModel model;
  const auto kind = j.at("kind").get<std::string>();
  model.spec.kind =
      kind == "ridge" ? RegressorKind::kRidge : RegressorKind::kRandomForest;
  model.n_bits = j.at("n_bits").get<int>();
  const auto& spec = j.at("spec");
  model.spec.ridge_lambda = spec.at("ridge_lambda").get<double>();
  model.spec.n_trees = spec.at("n_trees").get<int>();
  model.spec.max_features = spec.at("max_features").get<int>();
  model.spec.min_samples_split = spec.at("min_samples_split").get<int>();
  model.spec.bootstrap = spec.at("bootstrap").get<bool>();
  model.spec.seed = spec.at("seed").get<std::uint64_t>();

  if (model.spec.kind == RegressorKind::kRidge) {
    model.intercept = j.at("intercept").get<double>();
    const auto w = j.at("weights").get<std::vector<double>>();
    model.weights = Eigen::Map<const Eigen::VectorXd>(
        w.data(), static_cast<Eigen::Index>(w.size()));
  } else {
    for (const auto& tree_json : j.at("trees")) {
      RegressionTree tree;
      for (const auto& node_json : tree_json) {
        TreeNode node;
        node.feature = node_json.at(0).get<int>();
        node.left = node_json.at(1).get<std::int32_t>();
        node.right = node_json.at(2).get<std::int32_t>();
        node.value = node_json.at(3).get<double>();
        tree.nodes.push_back(node);
      }
      model.trees.push_back(std::move(tree));
    }
  }
  return model;
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << serialize_model(model) << '\n';
}

FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return deserialize_model(blob);
}

}  // namespace domainrank

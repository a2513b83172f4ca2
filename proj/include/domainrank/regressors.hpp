#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "domainrank/fingerprint.hpp"

namespace domainrank {

enum class RegressorKind { kRidge, kRandomForest };

struct RegressorSpec {
  RegressorKind kind = RegressorKind::kRidge;
  double ridge_lambda = 1.0;
  int n_trees = 10;
  int max_features = 0;  // 0 = consider every feature at each split
  int min_samples_split = 2;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(const Fingerprint& x) const;
};

struct FittedModel {
  RegressorSpec spec;
  int n_bits = 0;

  // ridge
  Eigen::VectorXd weights;
  double intercept = 0.0;

  // forest
  std::vector<RegressionTree> trees;

  double predict(const Fingerprint& x) const;
};

// Rows are fingerprints as 0/1 features.
Eigen::MatrixXd design_matrix(std::span<const Fingerprint> fps);

// Ridge: minimizes ||y - Xw - b||^2 + lambda*||w||^2 with an unpenalized
// intercept, via an SPD normal-equation solve (dual form when p > n).
// Forest: CART regression trees with variance-reduction splits on bit
// features, bootstrap resamples, leaves grown until min_samples_split; each
// tree's randomness comes from a substream keyed by (seed, tree index), and
// rows are canonicalized so the fit is independent of row order.
FittedModel fit(const RegressorSpec& spec, std::span<const Fingerprint> X,
                const Eigen::VectorXd& y);

double predict(const FittedModel& model, const Fingerprint& x);

std::string serialize_model(const FittedModel& model);
FittedModel deserialize_model(const std::string& blob);
void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace domainrank

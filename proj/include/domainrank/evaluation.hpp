#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "domainrank/scoring.hpp"
#include "domainrank/synthetic.hpp"

namespace domainrank {

enum class PoolMode { kNear, kFar };

// Quantile-activity split benchmark cell: train on low-activity compounds,
// test on held-out high-activity compounds hidden in a large unlabelled pool.
struct SplitSpec {
  double q_train = 7.0;  // activity threshold, not a percentile
  double q_test = 7.5;
  PoolMode pool_mode = PoolMode::kNear;
  std::size_t pool_size = 500'000;
  double delta_ref = 0.19;

  std::string name() const;
};

struct QuantileSplit {
  LabelledSet train;         // activity < q_train
  LabelledSet test_actives;  // activity >= q_test
};

// Compounds in [q_train, q_test) are discarded from both sides.
QuantileSplit quantile_split(const LabelledSet& labelled, double q_train,
                             double q_test);

struct TestPool {
  std::vector<Candidate> candidates;
  std::vector<double> segment_weights;  // normalized selection weights
};

// Near mode weights segments by n_{delta_ref,i}; far mode by the inverse
// 1/max(n_i,1). Draws `size` pool compounds without replacement. Held-out
// test actives are appended by the caller.
TestPool build_test_pool(const UnlabelledPool& pool,
                         const std::vector<Fingerprint>& train_fps, PoolMode mode,
                         double delta_ref, std::size_t size, std::uint64_t seed);

struct RecallCurve {
  std::vector<std::pair<std::size_t, double>> points;  // (n selected, % found)

  double at(std::size_t n_selected) const;  // value of the stored point at n
};

// Percent of truth ids inside the top-n, on a logarithmic grid of n plus
// n = 1000 and n = N. truth must be a nonempty subset of the ranked ids.
RecallCurve recall_curve(const RankedList& ranking,
                         const std::unordered_set<std::string>& truth);

// Everything fit_pipeline produces on a training set; feeds a ScoringContext.
struct FittedPipeline {
  ActivityTransform transform;
  LabelledSet train_standardized;
  std::vector<Fingerprint> train_fps;
  FittedModel model;
  DistanceSample active_sample;
  DistanceSample background_sample;
  PriorCurve prior;
  DegradationCurves degradation;
  SigmaCurve sigma_curve;
  MixtureDistribution mixture;
  double threshold_standardized = 0.0;
  S3MeanSource s3_mean_source = S3MeanSource::kS1;

  ScoringContext context() const;
};

struct PipelineParams {
  int v = 2;
  int k = 5;
  double delta_weight = 0.15;
  std::size_t background_m = 100'000;
  std::optional<double> gamma_override;
  BaseRateMode base_rate_mode = BaseRateMode::kCounts;
  int prior_grid_points = 101;
  int degradation_grid = 10;
  std::size_t degradation_max_targets = 500;
  std::size_t degradation_min_train = 50;
  double covariance_bin_width = 0.02;
  std::size_t covariance_min_pairs = 100;
  std::size_t covariance_max_pairs = 5'000'000;
  double threshold = 8.0;  // I, in raw activity units
  S3MeanSource s3_mean_source = S3MeanSource::kS1;
};

// Standardizes activities, fits the model and every correction stage on the
// training set only; the pool contributes structures (never activities).
FittedPipeline fit_pipeline(const LabelledSet& train_raw, const UnlabelledPool& pool,
                            const RegressorSpec& model_spec,
                            const PipelineParams& params, std::uint64_t seed);

struct BenchmarkCell {
  std::string name;
  SplitSpec split;
  RegressorSpec model_spec;
  std::size_t n_train = 0;
  std::size_t n_test_actives = 0;
  std::size_t n_candidates = 0;
  std::vector<std::pair<ScoreVariant, RecallCurve>> recall;
  std::vector<std::pair<ScoreVariant, RankedList>> rankings;
};

struct BenchmarkReport {
  std::vector<BenchmarkCell> cells;
  std::uint64_t seed = 0;
};

BenchmarkReport run_benchmark(const LabelledSet& labelled, const UnlabelledPool& pool,
                              const std::vector<SplitSpec>& splits,
                              const std::vector<RegressorSpec>& model_specs,
                              const std::vector<ScoreVariant>& variants,
                              const PipelineParams& params, std::uint64_t seed);

// Per-cell recall CSV and ranking CSV, an SVG line chart per cell, and a JSON
// manifest of configs and seeds.
void save_benchmark(const BenchmarkReport& report, const std::filesystem::path& dir);

}  // namespace domainrank

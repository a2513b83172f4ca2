#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "domainrank/dataset.hpp"
#include "domainrank/rng.hpp"

namespace domainrank {

// Half-open histogram bin width realizing "compounds with minimum distance
// delta" for the segment-weighted sampling scheme.
inline constexpr double kSegmentBinWidth = 0.01;

struct SampleParams {
  // cross-prediction (active) sample
  int v = 0;
  int k = 0;
  // segment-weighted (background) sample
  double delta_weight = 0.0;
  std::size_t m = 0;
  std::vector<std::size_t> segment_bin_counts;  // n_{delta,i}
};

struct DistanceSample {
  std::vector<double> values;
  std::string kind;  // "active" or "background"
  std::uint64_t seed = 0;
  SampleParams params;
};

// Empirical sample of P[d(x, L) | x active] via v-fold cross-prediction: per
// repetition the labelled set is partitioned into v equal folds (remainder
// round-robin) and each compound records its setwise distance to the
// complement of its own fold. Output order is (repetition, compound index),
// k values per compound.
DistanceSample sample_active_setwise(const LabelledSet& labelled, int v, int k,
                                     std::uint64_t seed);

// Per-segment counts of pool compounds whose setwise distance to the labelled
// set falls in the bin containing delta.
std::vector<std::size_t> segment_bin_counts(const UnlabelledPool& pool,
                                            const std::vector<double>& distances,
                                            double delta,
                                            double bin_width = kSegmentBinWidth);

// Draws `count` pool indices without replacement: each draw picks a segment
// with probability proportional to its weight, then a uniform remaining
// compound within it. An exhausted segment's mass is renormalized over the
// remaining segments.
std::vector<std::size_t> weighted_pool_draw(const UnlabelledPool& pool,
                                            const std::vector<double>& segment_weights,
                                            std::size_t count, Rng& rng);

// Empirical sample of P[d(x, L)]: draws m pool compounds, segment chosen with
// probability proportional to n_{delta,i}, and returns their setwise
// distances to the labelled set.
DistanceSample sample_background(const UnlabelledPool& pool, const LabelledSet& labelled,
                                 double delta_weight, std::size_t m,
                                 std::uint64_t seed);

// Number of pool compounds drawable under the segment weighting, i.e. the
// total size of segments whose bin count is positive.
std::size_t max_background_draws(const UnlabelledPool& pool,
                                 const std::vector<std::size_t>& bin_counts);

// Single-column CSV `distance` plus a JSON sidecar with kind, params, seed.
void save_sample(const DistanceSample& sample, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path);
DistanceSample load_sample(const std::filesystem::path& csv_path,
                           const std::filesystem::path& json_path);

}  // namespace domainrank

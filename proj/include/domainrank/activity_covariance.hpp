#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "domainrank/dataset.hpp"

namespace domainrank {

// Distinct unordered pairs of labelled compounds, bucketed by pairwise
// distance into half-open bins; "pairs at distance exactly delta" is realized
// as bin membership.
struct BinnedPairs {
  double bin_width = 0.02;
  std::vector<double> sum_sq_diff;  // sum of (y_i - y_j)^2 per bin
  std::vector<std::size_t> counts;
  bool sampled = false;
  std::size_t n_pairs_collected = 0;
  std::uint64_t seed = 0;

  double center(std::size_t bin) const {
    return (static_cast<double>(bin) + 0.5) * bin_width;
  }
};

// Enumerates all n(n-1)/2 pairs when they fit under max_pairs, otherwise
// uniformly samples max_pairs distinct pairs.
BinnedPairs collect_pair_bins(const LabelledSet& labelled, double bin_width = 0.02,
                              std::size_t max_pairs = 5'000'000,
                              std::uint64_t seed = 0);

// Per qualifying bin, sigma = sqrt(mean (y_i - y_j)^2), the zero-mean MLE of
// the distance-dependent difference scale. Raw values are then pooled to a
// non-decreasing sequence (PAVA on sigma^2, count-weighted).
struct SigmaCurve {
  std::vector<double> bin_centers;
  std::vector<double> sigma_raw;
  std::vector<double> sigma_pooled;
  std::vector<std::size_t> counts;
};

SigmaCurve fit_sigma_curve(const BinnedPairs& bins, std::size_t min_pairs = 100);

// Piecewise-linear interpolation of the pooled values over bin centers,
// constant beyond the supported range. delta outside [0,1] raises DomainError.
double sigma(const SigmaCurve& curve, double delta);

// Both pooling states, each as CSV `delta,sigma,count`.
void save_sigma(const SigmaCurve& curve, const std::filesystem::path& pooled_csv,
                const std::filesystem::path& raw_csv);
SigmaCurve load_sigma(const std::filesystem::path& pooled_csv,
                      const std::filesystem::path& raw_csv);

}  // namespace domainrank

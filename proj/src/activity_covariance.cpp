#include "domainrank/activity_covariance.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "domainrank/csv.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/monotone.hpp"
#include "domainrank/rng.hpp"

namespace domainrank {

BinnedPairs collect_pair_bins(const LabelledSet& labelled, double bin_width,
                              std::size_t max_pairs, std::uint64_t seed) {
  const std::size_t n = labelled.size();
  if (n < 2) throw DomainError("pair collection needs at least 2 compounds");
  if (bin_width <= 0.0 || bin_width > 1.0)
    throw DomainError("bin width must lie in (0,1]");

  BinnedPairs bins;
  bins.bin_width = bin_width;
  bins.seed = seed;
  const auto n_bins = static_cast<std::size_t>(std::floor(1.0 / bin_width)) + 1;
  bins.sum_sq_diff.assign(n_bins, 0.0);
  bins.counts.assign(n_bins, 0);

  const auto fps = labelled.fingerprints();
  const Eigen::VectorXd y = labelled.activities();

  const auto add_pair = [&](std::size_t i, std::size_t j) {
    const double d = tanimoto_distance(fps[i], fps[j]);
    const auto bin = std::min(static_cast<std::size_t>(std::floor(d / bin_width)),
                              n_bins - 1);
    const double diff = y[static_cast<Eigen::Index>(i)] -
                        y[static_cast<Eigen::Index>(j)];
    bins.sum_sq_diff[bin] += diff * diff;
    ++bins.counts[bin];
    ++bins.n_pairs_collected;
  };

  const std::size_t total = n * (n - 1) / 2;
  if (total <= max_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) add_pair(i, j);
    return bins;
  }

  bins.sampled = true;
  Rng rng(derive_seed(seed, "pair_sample"));
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(max_pairs * 2);
  while (bins.n_pairs_collected < max_pairs) {
    auto i = static_cast<std::size_t>(rng.below(n));
    auto j = static_cast<std::size_t>(rng.below(n));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    const std::uint64_t code = static_cast<std::uint64_t>(i) * n + j;
    if (!seen.insert(code).second) continue;
    add_pair(i, j);
  }
  return bins;
}

SigmaCurve fit_sigma_curve(const BinnedPairs& bins, std::size_t min_pairs) {
  SigmaCurve curve;
  for (std::size_t b = 0; b < bins.counts.size(); ++b) {
    if (bins.counts[b] < min_pairs) continue;
    curve.bin_centers.push_back(bins.center(b));
    curve.sigma_raw.push_back(
        std::sqrt(bins.sum_sq_diff[b] / static_cast<double>(bins.counts[b])));
    curve.counts.push_back(bins.counts[b]);
  }
  if (curve.bin_centers.empty())
    throw DomainError("no distance bin holds at least " + std::to_string(min_pairs) +
                      " pairs");

  const auto m = static_cast<Eigen::Index>(curve.sigma_raw.size());
  Eigen::VectorXd variances(m), weights(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = curve.sigma_raw[static_cast<std::size_t>(i)];
    variances[i] = s * s;
    weights[i] = static_cast<double>(curve.counts[static_cast<std::size_t>(i)]);
  }
  const Eigen::VectorXd pooled = isotonic_non_decreasing<double>(variances, weights);
  curve.sigma_pooled.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i)
    curve.sigma_pooled[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, pooled[i]));
  return curve;
}

double sigma(const SigmaCurve& curve, double delta) {
  if (delta < 0.0 || delta > 1.0)
    throw DomainError("sigma evaluated outside [0,1]: " + std::to_string(delta));
  const auto& x = curve.bin_centers;
  const auto& s = curve.sigma_pooled;
  if (delta <= x.front()) return s.front();
  if (delta >= x.back()) return s.back();
  const auto it = std::upper_bound(x.begin(), x.end(), delta);
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  const double t = (delta - x[lo]) / (x[hi] - x[lo]);
  return s[lo] + t * (s[hi] - s[lo]);
}

static void write_sigma_csv(const std::filesystem::path& path,
                            const std::vector<double>& centers,
                            const std::vector<double>& values,
                            const std::vector<std::size_t>& counts) {
  csv::Writer w(path, "delta,sigma,count");
  for (std::size_t i = 0; i < centers.size(); ++i)
    w.row({csv::format_double(centers[i]), csv::format_double(values[i]),
           std::to_string(counts[i])});
  w.close();
}

void save_sigma(const SigmaCurve& curve, const std::filesystem::path& pooled_csv,
                const std::filesystem::path& raw_csv) {
  write_sigma_csv(pooled_csv, curve.bin_centers, curve.sigma_pooled, curve.counts);
  write_sigma_csv(raw_csv, curve.bin_centers, curve.sigma_raw, curve.counts);
}

SigmaCurve load_sigma(const std::filesystem::path& pooled_csv,
                      const std::filesystem::path& raw_csv) {
  SigmaCurve curve;
  for (const auto& row : csv::read_rows(pooled_csv, "delta,sigma,count")) {
    curve.bin_centers.push_back(*csv::parse_double(row.at(0)));
    curve.sigma_pooled.push_back(*csv::parse_double(row.at(1)));
    curve.counts.push_back(static_cast<std::size_t>(*csv::parse_int(row.at(2))));
  }
  for (const auto& row : csv::read_rows(raw_csv, "delta,sigma,count"))
    curve.sigma_raw.push_back(*csv::parse_double(row.at(1)));
  if (curve.bin_centers.empty()) throw IngestError("empty sigma curve");
  return curve;
}

}  // namespace domainrank

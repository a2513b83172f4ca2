#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "domainrank/fingerprint.hpp"

namespace domainrank {

struct LabelledCompound {
  std::string id;
  Fingerprint fp;
  double activity = 0.0;  // pIC50, dimensionless
};

// Structure-activity data selected above a reporting cutoff l_min. When the
// size of the original screening library is known it is carried along as
// screened_count (n').
struct LabelledSet {
  std::vector<LabelledCompound> compounds;
  double l_min = 0.0;
  std::optional<std::int64_t> screened_count;

  std::size_t size() const { return compounds.size(); }
  Eigen::VectorXd activities() const;
  std::vector<Fingerprint> fingerprints() const;
};

struct UnlabelledCompound {
  std::string id;
  Fingerprint fp;
  int segment = 0;
};

// Structure-only pool, deduplicated against a labelled set. Segments are the
// source-file indices, contiguous from 0.
struct UnlabelledPool {
  std::vector<UnlabelledCompound> compounds;
  int segment_count = 0;

  std::size_t size() const { return compounds.size(); }
  std::vector<Fingerprint> fingerprints() const;
};

struct ActivityTransform {
  double mean = 0.0;
  double sd = 1.0;

  double standardize(double y) const { return (y - mean) / sd; }
  double invert(double z) const { return z * sd + mean; }
};

struct LoadReport {
  std::size_t rows_total = 0;
  std::size_t rows_rejected_below_lmin = 0;
  std::size_t duplicates_removed = 0;
};

// Labelled CSV schema: header `id,fingerprint,activity`. Rows below l_min are
// rejected and counted in the report; malformed rows raise IngestError naming
// the file and row.
LabelledSet load_labelled(const std::filesystem::path& path, double l_min,
                          std::optional<std::int64_t> screened_count = std::nullopt,
                          LoadReport* report = nullptr);

// Unlabelled CSV schema: header `id,fingerprint`; one file per segment, in
// order. Compounds whose fingerprint equals any labelled fingerprint are
// removed (count reported).
UnlabelledPool load_unlabelled(const std::vector<std::filesystem::path>& paths,
                               const LabelledSet& labelled,
                               LoadReport* report = nullptr);

void save_labelled(const LabelledSet& set, const std::filesystem::path& path);
void save_unlabelled_segment(const UnlabelledPool& pool, int segment,
                             const std::filesystem::path& path);

// Returns the set with activities shifted/scaled to sample mean 0 and sample
// standard deviation 1 (n-1 denominator), plus the inverse transform.
std::pair<LabelledSet, ActivityTransform> standardize_activities(const LabelledSet& set);

}  // namespace domainrank

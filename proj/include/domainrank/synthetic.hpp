#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "domainrank/dataset.hpp"
#include "domainrank/fingerprint.hpp"

namespace domainrank {

enum class LandscapeKind {
  kSmooth,     // activity = affine function of weighted popcount over a bit walk
  kClustered,  // planted active clusters around seed fingerprints
  kNoise,      // activity independent of structure
};

struct LandscapeSpec {
  int p = 128;
  LandscapeKind kind = LandscapeKind::kClustered;
  double active_fraction = 0.01;
  double noise_sd = 0.02;
  std::uint64_t seed = 0;

  // Structural knobs; defaults give tight clusters well separated from the
  // random background, so compounds at small distance from an active are
  // themselves active.
  int n_clusters = 20;
  int max_flips = 6;
  double seed_density = 0.35;
  double walk_flip_prob = 0.02;
};

struct TrueCompound {
  std::string id;
  Fingerprint fp;
  double activity = 0.0;
  bool active = false;
  bool screened = false;  // part of the screening library rather than the pool
};

struct SyntheticDataset {
  std::vector<TrueCompound> truth;  // every generated compound, withheld from the pipeline
  LabelledSet labelled;             // screened actives only (reporting bias applied)
  UnlabelledPool pool;              // fresh unscreened draw, deduplicated against labelled
  double cutoff = 0.0;
  std::size_t pool_duplicates_removed = 0;
};

// Draws n_screened + n_unlabelled compounds from one seeded process. The
// screened part plays the role of the original screening library (n' =
// n_screened); its above-cutoff compounds become the labelled set. The
// unscreened remainder becomes the unlabelled pool, so the pool carries its
// own share of unlabelled actives. Pool segments are distance deciles to the
// labelled set, mimicking the ordering artifact of vendor catalogues.
SyntheticDataset generate_landscape(const LandscapeSpec& spec,
                                    std::size_t n_screened,
                                    std::size_t n_unlabelled);

// Emits labelled.csv, unlabelled_<seg>.csv per segment, and truth.csv.
std::vector<std::filesystem::path> save_landscape(const SyntheticDataset& data,
                                                  const std::filesystem::path& dir);

}  // namespace domainrank

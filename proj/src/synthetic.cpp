#include "domainrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "domainrank/csv.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/rng.hpp"
#include "domainrank/stats.hpp"

namespace domainrank {

namespace {

Fingerprint random_fingerprint(Rng& rng, int p, double density) {
  Fingerprint fp(p);
  for (int j = 0; j < p; ++j)
    if (rng.bernoulli(density)) fp.set(j);
  return fp;
}

Fingerprint perturb(Rng& rng, const Fingerprint& base, int n_flips) {
  Fingerprint fp = base;
  for (int f = 0; f < n_flips; ++f) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(fp.bits())));
    fp.set(j, !fp.test(j));
  }
  return fp;
}

std::string compound_id(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "syn-%07zu", index);
  return buf;
}

}  // namespace

SyntheticDataset generate_landscape(const LandscapeSpec& spec,
                                    std::size_t n_screened,
                                    std::size_t n_unlabelled) {
  if (n_screened == 0 || n_unlabelled == 0)
    throw DomainError("synthetic generation needs positive screened and pool sizes");
  if (spec.active_fraction <= 0.0 || spec.active_fraction > 1.0)
    throw DomainError("active_fraction must lie in (0,1]");

  const std::size_t n_total = n_screened + n_unlabelled;
  Rng rng(derive_seed(spec.seed, "synthetic"));

  // Which generated compounds are part of the screening library.
  std::vector<bool> screened(n_total, false);
  for (std::size_t i : rng.sample_indices(n_total, n_screened)) screened[i] = true;

  SyntheticDataset data;
  data.truth.reserve(n_total);

  std::vector<Fingerprint> seeds;
  std::vector<double> heights;
  for (int c = 0; c < spec.n_clusters; ++c) {
    seeds.push_back(random_fingerprint(rng, spec.p, spec.seed_density));
    heights.push_back(1.0 + 0.5 * rng.uniform());
  }

  std::vector<double> popcount_weights;  // smooth kind
  if (spec.kind == LandscapeKind::kSmooth) {
    popcount_weights.resize(static_cast<std::size_t>(spec.p));
    for (auto& w : popcount_weights) w = rng.uniform();
  }
  Fingerprint walk = random_fingerprint(rng, spec.p, 0.5);

  double min_cluster_activity = std::numeric_limits<double>::infinity();
  double max_background_activity = -std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < n_total; ++i) {
    TrueCompound tc;
    tc.id = compound_id(i);
    tc.screened = screened[i];

    switch (spec.kind) {
      case LandscapeKind::kClustered: {
        if (rng.bernoulli(spec.active_fraction)) {
          const auto c = static_cast<std::size_t>(rng.below(seeds.size()));
          const int flips = static_cast<int>(rng.below(spec.max_flips + 1));
          tc.fp = perturb(rng, seeds[c], flips);
          tc.activity = heights[c] -
                        2.0 * static_cast<double>(flips) / spec.p +
                        rng.normal(0.0, spec.noise_sd);
          min_cluster_activity = std::min(min_cluster_activity, tc.activity);
        } else {
          tc.fp = random_fingerprint(rng, spec.p, rng.uniform(0.2, 0.5));
          tc.activity = rng.normal(0.0, 0.25);
          max_background_activity = std::max(max_background_activity, tc.activity);
        }
        break;
      }
      case LandscapeKind::kNoise: {
        // Clustered structure, unrelated activity.
        if (rng.bernoulli(0.5)) {
          const auto c = static_cast<std::size_t>(rng.below(seeds.size()));
          const int flips = static_cast<int>(rng.below(spec.max_flips + 1));
          tc.fp = perturb(rng, seeds[c], flips);
        } else {
          tc.fp = random_fingerprint(rng, spec.p, rng.uniform(0.2, 0.5));
        }
        tc.activity = rng.normal(0.0, 1.0);
        break;
      }
      case LandscapeKind::kSmooth: {
        for (int j = 0; j < spec.p; ++j)
          if (rng.bernoulli(spec.walk_flip_prob)) walk.set(j, !walk.test(j));
        tc.fp = walk;
        double weighted = 0.0, total = 0.0;
        for (int j = 0; j < spec.p; ++j) {
          total += popcount_weights[static_cast<std::size_t>(j)];
          if (walk.test(j)) weighted += popcount_weights[static_cast<std::size_t>(j)];
        }
        tc.activity = 4.0 * weighted / total + rng.normal(0.0, spec.noise_sd);
        break;
      }
    }
    data.truth.push_back(std::move(tc));
  }

  // Reporting cutoff. Clustered landscapes get a cutoff in the structural gap
  // between background and cluster activities; otherwise the cutoff is the
  // (1 - active_fraction) quantile of the screened activities.
  if (spec.kind == LandscapeKind::kClustered &&
      std::isfinite(min_cluster_activity) && std::isfinite(max_background_activity)) {
    data.cutoff = 0.5 * (min_cluster_activity + max_background_activity);
  } else if (spec.active_fraction >= 1.0) {
    data.cutoff = -std::numeric_limits<double>::infinity();
  } else {
    std::vector<double> screened_activities;
    screened_activities.reserve(n_screened);
    for (const auto& tc : data.truth)
      if (tc.screened) screened_activities.push_back(tc.activity);
    std::sort(screened_activities.begin(), screened_activities.end());
    data.cutoff = quantile_sorted(screened_activities, 1.0 - spec.active_fraction);
  }

  for (auto& tc : data.truth) tc.active = tc.activity >= data.cutoff;

  data.labelled.l_min = data.cutoff;
  data.labelled.screened_count = static_cast<std::int64_t>(n_screened);
  for (const auto& tc : data.truth)
    if (tc.screened && tc.active)
      data.labelled.compounds.push_back({tc.id, tc.fp, tc.activity});
  if (data.labelled.compounds.empty())
    throw DomainError("active_fraction yields an empty labelled set");

  std::unordered_set<Fingerprint, FingerprintHash> labelled_fps;
  for (const auto& c : data.labelled.compounds) labelled_fps.insert(c.fp);

  std::vector<const TrueCompound*> pool_members;
  for (const auto& tc : data.truth) {
    if (tc.screened) continue;
    if (labelled_fps.contains(tc.fp)) {
      ++data.pool_duplicates_removed;
      continue;
    }
    pool_members.push_back(&tc);
  }
  if (pool_members.empty()) throw DomainError("unlabelled pool is empty after dedup");

  // Segment by distance decile to the labelled set.
  std::vector<Fingerprint> pool_fps;
  pool_fps.reserve(pool_members.size());
  for (const auto* tc : pool_members) pool_fps.push_back(tc->fp);
  const std::vector<double> dists =
      batch_setwise_distances(pool_fps, data.labelled.fingerprints());

  std::vector<double> sorted = dists;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> decile_bounds(9);
  for (int d = 1; d <= 9; ++d)
    decile_bounds[static_cast<std::size_t>(d - 1)] =
        quantile_sorted(sorted, d / 10.0);

  data.pool.segment_count = 10;
  data.pool.compounds.reserve(pool_members.size());
  for (std::size_t i = 0; i < pool_members.size(); ++i) {
    const int seg = static_cast<int>(
        std::upper_bound(decile_bounds.begin(), decile_bounds.end(), dists[i]) -
        decile_bounds.begin());
    data.pool.compounds.push_back({pool_members[i]->id, pool_members[i]->fp, seg});
  }
  return data;
}

std::vector<std::filesystem::path> save_landscape(const SyntheticDataset& data,
                                                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;

  const auto labelled_path = dir / "labelled.csv";
  save_labelled(data.labelled, labelled_path);
  written.push_back(labelled_path);

  for (int seg = 0; seg < data.pool.segment_count; ++seg) {
    const auto seg_path = dir / ("unlabelled_" + std::to_string(seg) + ".csv");
    save_unlabelled_segment(data.pool, seg, seg_path);
    written.push_back(seg_path);
  }

  const auto truth_path = dir / "truth.csv";
  csv::Writer w(truth_path, "id,fingerprint,activity,active,screened");
  for (const auto& tc : data.truth)
    w.row({tc.id, tc.fp.to_hex(), csv::format_double(tc.activity),
           tc.active ? "1" : "0", tc.screened ? "1" : "0"});
  w.close();
  written.push_back(truth_path);
  return written;
}

}  // namespace domainrank

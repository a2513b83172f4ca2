#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unordered_set>

#include "domainrank/errors.hpp"
#include "domainrank/synthetic.hpp"
#include "test_util.hpp"

using namespace domainrank;

TEST_CASE("generator bookkeeping recovers n and n' exactly") {
  LandscapeSpec spec;
  spec.kind = LandscapeKind::kClustered;
  spec.active_fraction = 0.05;
  spec.seed = 42;

  const SyntheticDataset data = generate_landscape(spec, 2000, 3000);
  CHECK(data.truth.size() == 5000);
  CHECK(*data.labelled.screened_count == 2000);

  std::size_t screened_actives = 0, screened = 0;
  for (const auto& tc : data.truth) {
    if (tc.screened) ++screened;
    if (tc.screened && tc.active) ++screened_actives;
  }
  CHECK(screened == 2000);
  CHECK(data.labelled.size() == screened_actives);

  // Labelled activities all at or above the cutoff.
  for (const auto& c : data.labelled.compounds) CHECK(c.activity >= data.cutoff);
}

TEST_CASE("pool contains no labelled fingerprint and its own unlabelled actives") {
  LandscapeSpec spec;
  spec.kind = LandscapeKind::kClustered;
  spec.active_fraction = 0.05;
  spec.seed = 1;

  const SyntheticDataset data = generate_landscape(spec, 2000, 3000);

  std::unordered_set<Fingerprint, FingerprintHash> labelled_fps;
  for (const auto& c : data.labelled.compounds) labelled_fps.insert(c.fp);
  for (const auto& c : data.pool.compounds) CHECK(!labelled_fps.contains(c.fp));

  std::unordered_set<std::string> pool_ids;
  for (const auto& c : data.pool.compounds) pool_ids.insert(c.id);
  std::size_t unlabelled_actives = 0;
  for (const auto& tc : data.truth)
    if (!tc.screened && tc.active && pool_ids.contains(tc.id)) ++unlabelled_actives;
  CHECK(unlabelled_actives > 0);
}

TEST_CASE("segments follow distance deciles") {
  LandscapeSpec spec;
  spec.kind = LandscapeKind::kClustered;
  spec.active_fraction = 0.05;
  spec.seed = 2;

  const SyntheticDataset data = generate_landscape(spec, 1000, 4000);
  CHECK(data.pool.segment_count == 10);

  const auto dists =
      batch_setwise_distances(data.pool.fingerprints(), data.labelled.fingerprints());

  // Max distance in segment s must not exceed min distance in segment s+2
  // (adjacent segments may share their boundary value).
  std::vector<double> seg_min(10, 2.0), seg_max(10, -1.0);
  std::vector<std::size_t> seg_count(10, 0);
  for (std::size_t i = 0; i < data.pool.compounds.size(); ++i) {
    const int s = data.pool.compounds[i].segment;
    seg_min[static_cast<std::size_t>(s)] =
        std::min(seg_min[static_cast<std::size_t>(s)], dists[i]);
    seg_max[static_cast<std::size_t>(s)] =
        std::max(seg_max[static_cast<std::size_t>(s)], dists[i]);
    ++seg_count[static_cast<std::size_t>(s)];
  }
  for (std::size_t s = 0; s + 2 < 10; ++s)
    if (seg_count[s] && seg_count[s + 2])
      CHECK(seg_max[s] <= seg_min[s + 2] + 1e-12);

  // Deciles are roughly equal-sized.
  for (std::size_t s = 0; s < 10; ++s) CHECK(seg_count[s] > data.pool.size() / 30);
}

TEST_CASE("same seed regenerates bit-identically") {
  LandscapeSpec spec;
  spec.kind = LandscapeKind::kNoise;
  spec.active_fraction = 0.1;
  spec.seed = 77;

  const SyntheticDataset a = generate_landscape(spec, 500, 800);
  const SyntheticDataset b = generate_landscape(spec, 500, 800);
  REQUIRE(a.truth.size() == b.truth.size());
  for (std::size_t i = 0; i < a.truth.size(); ++i) {
    CHECK(a.truth[i].fp == b.truth[i].fp);
    CHECK(a.truth[i].activity == b.truth[i].activity);
    CHECK(a.truth[i].active == b.truth[i].active);
  }
  CHECK(a.cutoff == b.cutoff);
}

TEST_CASE("active_fraction 1 labels the whole screening library") {
  LandscapeSpec spec;
  spec.kind = LandscapeKind::kNoise;
  spec.active_fraction = 1.0;
  spec.seed = 5;

  const SyntheticDataset data = generate_landscape(spec, 400, 400);
  CHECK(data.labelled.size() == 400);
  CHECK(data.cutoff == -std::numeric_limits<double>::infinity());
}

TEST_CASE("saved landscape files load back through the dataset module") {
  testutil::TempDir tmp("synth");
  LandscapeSpec spec;
  spec.kind = LandscapeKind::kClustered;
  spec.active_fraction = 0.05;
  spec.seed = 3;

  const SyntheticDataset data = generate_landscape(spec, 800, 1200);
  const auto files = save_landscape(data, tmp.path());
  CHECK(files.size() == 12);  // labelled + 10 segments + truth

  const LabelledSet labelled = load_labelled(tmp.path() / "labelled.csv", data.cutoff);
  CHECK(labelled.size() == data.labelled.size());

  std::vector<std::filesystem::path> seg_paths;
  for (int s = 0; s < 10; ++s)
    seg_paths.push_back(tmp.path() / ("unlabelled_" + std::to_string(s) + ".csv"));
  LoadReport report;
  const UnlabelledPool pool = load_unlabelled(seg_paths, labelled, &report);
  CHECK(pool.size() == data.pool.size());
  CHECK(report.duplicates_removed == 0);  // generator already deduplicated
}

TEST_CASE("degenerate requests are rejected") {
  LandscapeSpec spec;
  spec.active_fraction = 0.0;
  CHECK_THROWS_AS(generate_landscape(spec, 100, 100), DomainError);
  spec.active_fraction = 0.5;
  CHECK_THROWS_AS(generate_landscape(spec, 0, 100), DomainError);
}

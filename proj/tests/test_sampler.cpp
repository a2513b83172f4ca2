#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "domainrank/distance_sampler.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/synthetic.hpp"
#include "test_util.hpp"

using namespace domainrank;

namespace {

LabelledSet make_labelled(const std::vector<Fingerprint>& fps) {
  LabelledSet set;
  set.l_min = 0.0;
  for (std::size_t i = 0; i < fps.size(); ++i)
    set.compounds.push_back({"c" + std::to_string(i), fps[i], 1.0});
  return set;
}

}  // namespace

TEST_CASE("v=2, k=1 on four compounds gives one distance per compound") {
  Rng rng(1);
  const auto fps = testutil::random_fps(rng, 4, 128, 0.4);
  const LabelledSet set = make_labelled(fps);

  const DistanceSample sample = sample_active_setwise(set, 2, 1, 99);
  REQUIRE(sample.values.size() == 4);

  // Each compound's value is its distance to the opposite fold of size 2, so
  // it equals the distance to one of the three other compounds and is at
  // least the setwise distance to all of them.
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> to_others;
    for (std::size_t j = 0; j < 4; ++j)
      if (j != i) to_others.push_back(tanimoto_distance(fps[i], fps[j]));
    const double lower = *std::min_element(to_others.begin(), to_others.end());
    CHECK(sample.values[i] >= lower - 1e-15);
    const bool is_one_of_them =
        std::any_of(to_others.begin(), to_others.end(), [&](double d) {
          return std::abs(d - sample.values[i]) < 1e-15;
        });
    CHECK(is_one_of_them);
  }
}

TEST_CASE("every compound contributes exactly k distances") {
  Rng rng(2);
  const LabelledSet set = make_labelled(testutil::random_fps(rng, 20, 128));
  const DistanceSample sample = sample_active_setwise(set, 2, 5, 7);
  CHECK(sample.values.size() == 100);  // k * n
  CHECK(sample.params.v == 2);
  CHECK(sample.params.k == 5);
  for (double d : sample.values) {
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
  }
}

TEST_CASE("v=3 also yields one distance per compound per repetition") {
  Rng rng(3);
  const LabelledSet set = make_labelled(testutil::random_fps(rng, 12, 64));
  const DistanceSample sample = sample_active_setwise(set, 3, 2, 11);
  CHECK(sample.values.size() == 24);
}

TEST_CASE("duplicate fingerprints split across folds yield zero distances") {
  Rng rng(4);
  const Fingerprint shared = testutil::random_fp(rng, 128);
  std::vector<Fingerprint> fps(10, shared);
  const LabelledSet set = make_labelled(fps);

  const DistanceSample sample = sample_active_setwise(set, 2, 3, 5);
  for (double d : sample.values) CHECK(d == 0.0);
}

TEST_CASE("cross-prediction sampling is deterministic in the seed") {
  Rng rng(5);
  const LabelledSet set = make_labelled(testutil::random_fps(rng, 30, 128));
  const DistanceSample a = sample_active_setwise(set, 2, 4, 17);
  const DistanceSample b = sample_active_setwise(set, 2, 4, 17);
  CHECK(a.values == b.values);
  const DistanceSample c = sample_active_setwise(set, 2, 4, 18);
  CHECK(a.values != c.values);
}

TEST_CASE("labelled set too small for the fold count") {
  Rng rng(6);
  const LabelledSet set = make_labelled(testutil::random_fps(rng, 3, 64));
  CHECK_THROWS_AS(sample_active_setwise(set, 2, 1, 0), DomainError);
}

TEST_CASE("single-segment background sampling is plain uniform without replacement") {
  LandscapeSpec spec;
  spec.kind = LandscapeKind::kClustered;
  spec.active_fraction = 0.1;
  spec.seed = 9;
  SyntheticDataset data = generate_landscape(spec, 500, 1000);
  for (auto& c : data.pool.compounds) c.segment = 0;
  data.pool.segment_count = 1;

  const auto all_dists =
      batch_setwise_distances(data.pool.fingerprints(), data.labelled.fingerprints());
  const double probe = all_dists[all_dists.size() / 2];

  const DistanceSample sample =
      sample_background(data.pool, data.labelled, std::clamp(probe, 0.01, 0.99),
                        200, 33);
  CHECK(sample.values.size() == 200);

  // Without replacement from one segment: drawn distances are a sub-multiset
  // of the pool distances, and strictly positive after dedup.
  std::vector<double> pool_sorted = all_dists;
  std::sort(pool_sorted.begin(), pool_sorted.end());
  std::vector<double> got = sample.values;
  std::sort(got.begin(), got.end());
  CHECK(std::includes(pool_sorted.begin(), pool_sorted.end(), got.begin(), got.end()));
  for (double d : sample.values) CHECK(d > 0.0);
}

TEST_CASE("two segments with bin counts (9,1) get weights (0.9, 0.1)") {
  // Anchor with exactly 64 set bits; single-bit flips land at 1/64 or 1/65,
  // both inside the bin [0.01, 0.02).
  Fingerprint anchor(128);
  for (int j = 0; j < 64; ++j) anchor.set(j);
  LabelledSet labelled;
  labelled.compounds.push_back({"L0", anchor, 1.0});

  UnlabelledPool pool;
  pool.segment_count = 2;
  int id = 0;
  const auto flipped = [&](int j) {
    Fingerprint fp = anchor;
    fp.set(j, !fp.test(j));
    return fp;
  };
  for (int i = 0; i < 9; ++i)  // segment 0: nine compounds in the probe bin
    pool.compounds.push_back({"a" + std::to_string(id++), flipped(i), 0});
  pool.compounds.push_back({"b" + std::to_string(id++), flipped(100), 1});
  Rng rng(10);
  for (int i = 0; i < 30; ++i)  // far decoys in both segments
    pool.compounds.push_back(
        {"far" + std::to_string(id++), testutil::random_fp(rng, 128, 0.5), i % 2});

  const auto dists =
      batch_setwise_distances(pool.fingerprints(), labelled.fingerprints());
  const double probe = 0.015;
  const auto counts = segment_bin_counts(pool, dists, probe);
  REQUIRE(counts.size() == 2);
  CHECK(counts[0] == 9);
  CHECK(counts[1] == 1);

  const DistanceSample sample = sample_background(pool, labelled, probe, 10, 3);
  CHECK(sample.params.segment_bin_counts == counts);
}

TEST_CASE("empty probe bin raises a domain error") {
  Rng rng(11);
  LabelledSet labelled = make_labelled(testutil::random_fps(rng, 5, 128, 0.5));
  UnlabelledPool pool;
  pool.segment_count = 1;
  // Random 128-bit fingerprints sit far from everything; the bin at 0.01 is empty.
  for (int i = 0; i < 50; ++i)
    pool.compounds.push_back({"u" + std::to_string(i),
                              testutil::random_fp(rng, 128, 0.5), 0});
  CHECK_THROWS_AS(sample_background(pool, labelled, 0.01, 10, 0), DomainError);
}

TEST_CASE("background draw count cannot exceed the pool") {
  Rng rng(12);
  LabelledSet labelled = make_labelled(testutil::random_fps(rng, 5, 128));
  UnlabelledPool pool;
  pool.segment_count = 1;
  pool.compounds.push_back({"u0", testutil::random_fp(rng, 128), 0});
  CHECK_THROWS_AS(sample_background(pool, labelled, 0.5, 5, 0), DomainError);
}

TEST_CASE("background sampling is deterministic and persists through files") {
  LandscapeSpec spec;
  spec.kind = LandscapeKind::kClustered;
  spec.active_fraction = 0.1;
  spec.seed = 21;
  const SyntheticDataset data = generate_landscape(spec, 500, 2000);

  const auto dists =
      batch_setwise_distances(data.pool.fingerprints(), data.labelled.fingerprints());
  std::vector<double> sorted = dists;
  std::sort(sorted.begin(), sorted.end());
  const double probe = std::clamp(sorted[sorted.size() / 4], 0.01, 0.99);

  const DistanceSample a = sample_background(data.pool, data.labelled, probe, 300, 5);
  const DistanceSample b = sample_background(data.pool, data.labelled, probe, 300, 5);
  CHECK(a.values == b.values);

  testutil::TempDir tmp("sample_io");
  save_sample(a, tmp.path() / "s.csv", tmp.path() / "s.json");
  const DistanceSample back = load_sample(tmp.path() / "s.csv", tmp.path() / "s.json");
  CHECK(back.values == a.values);
  CHECK(back.kind == a.kind);
  CHECK(back.seed == a.seed);
  CHECK(back.params.m == a.params.m);
  CHECK(back.params.segment_bin_counts == a.params.segment_bin_counts);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "domainrank/dataset.hpp"
#include "domainrank/errors.hpp"
#include "domainrank/stats.hpp"
#include "test_util.hpp"

using namespace domainrank;
using testutil::TempDir;
using testutil::write_file;

TEST_CASE("load_labelled parses rows and filters below l_min with a report") {
  TempDir tmp("labelled");
  const auto path = tmp.path() / "l.csv";
  write_file(path,
             "id,fingerprint,activity\n"
             "c1,ff00,6.5\n"
             "c2,0f0f,5.0\n"   // exactly at l_min: accepted
             "c3,00ff,4.99\n"  // below: rejected
             "c4,f00f,7.25\n");

  LoadReport report;
  const LabelledSet set = load_labelled(path, 5.0, 1000, &report);
  CHECK(set.size() == 3);
  CHECK(report.rows_total == 4);
  CHECK(report.rows_rejected_below_lmin == 1);
  CHECK(set.compounds[1].id == "c2");
  CHECK(set.compounds[1].activity == 5.0);
  CHECK(*set.screened_count == 1000);
}

TEST_CASE("CRLF files are accepted") {
  TempDir tmp("crlf");
  const auto path = tmp.path() / "l.csv";
  write_file(path, "id,fingerprint,activity\r\nc1,ff00,6.5\r\n");
  const LabelledSet set = load_labelled(path, 0.0);
  CHECK(set.size() == 1);
  CHECK(set.compounds[0].fp.to_hex() == "ff00");
}

TEST_CASE("malformed rows raise ingest errors naming the row") {
  TempDir tmp("bad");

  const auto bad_hex = tmp.path() / "hex.csv";
  write_file(bad_hex, "id,fingerprint,activity\nc1,zzzz,6.5\n");
  CHECK_THROWS_WITH_AS(load_labelled(bad_hex, 0.0),
                       doctest::Contains("row 1"), IngestError);

  const auto bad_activity = tmp.path() / "act.csv";
  write_file(bad_activity, "id,fingerprint,activity\nc1,ff00,sixish\n");
  CHECK_THROWS_AS(load_labelled(bad_activity, 0.0), IngestError);

  const auto dup_id = tmp.path() / "dup.csv";
  write_file(dup_id, "id,fingerprint,activity\nc1,ff00,6.5\nc1,0f0f,7.0\n");
  CHECK_THROWS_WITH_AS(load_labelled(dup_id, 0.0),
                       doctest::Contains("duplicate id"), IngestError);

  const auto bad_header = tmp.path() / "head.csv";
  write_file(bad_header, "id,fp,act\nc1,ff00,6.5\n");
  CHECK_THROWS_AS(load_labelled(bad_header, 0.0), IngestError);

  CHECK_THROWS_AS(load_labelled(tmp.path() / "missing.csv", 0.0), IoError);
}

TEST_CASE("load_unlabelled removes labelled-identical fingerprints and segments by file") {
  TempDir tmp("pool");
  const auto labelled_path = tmp.path() / "l.csv";
  write_file(labelled_path,
             "id,fingerprint,activity\na1,ff00,6.0\na2,0f0f,7.0\na3,00ff,8.0\n");
  const LabelledSet labelled = load_labelled(labelled_path, 0.0);

  const auto seg0 = tmp.path() / "u0.csv";
  const auto seg1 = tmp.path() / "u1.csv";
  write_file(seg0, "id,fingerprint\nu1,ff00\nu2,1234\nu3,0f0f\n");
  write_file(seg1, "id,fingerprint\nu4,00ff\nu5,4321\n");

  LoadReport report;
  const UnlabelledPool pool = load_unlabelled({seg0, seg1}, labelled, &report);
  CHECK(pool.size() == 2);
  CHECK(report.duplicates_removed == 3);
  CHECK(pool.segment_count == 2);
  CHECK(pool.compounds[0].id == "u2");
  CHECK(pool.compounds[0].segment == 0);
  CHECK(pool.compounds[1].id == "u5");
  CHECK(pool.compounds[1].segment == 1);

  CHECK_THROWS_AS(load_unlabelled({}, labelled), DomainError);
}

TEST_CASE("dedup is idempotent") {
  TempDir tmp("dedup");
  const auto labelled_path = tmp.path() / "l.csv";
  write_file(labelled_path, "id,fingerprint,activity\na1,ff00,6.0\n");
  const LabelledSet labelled = load_labelled(labelled_path, 0.0);

  const auto pool_path = tmp.path() / "u.csv";
  write_file(pool_path, "id,fingerprint\nu1,ff00\nu2,1234\n");
  LoadReport first;
  const UnlabelledPool pool = load_unlabelled({pool_path}, labelled, &first);
  CHECK(first.duplicates_removed == 1);

  const auto again = tmp.path() / "u2.csv";
  save_unlabelled_segment(pool, 0, again);
  LoadReport second;
  const UnlabelledPool pool2 = load_unlabelled({again}, labelled, &second);
  CHECK(second.duplicates_removed == 0);
  CHECK(pool2.size() == pool.size());
}

TEST_CASE("parse -> serialize -> parse is the identity") {
  TempDir tmp("roundtrip");
  Rng rng(3);
  LabelledSet set;
  set.l_min = -10.0;
  for (int i = 0; i < 40; ++i)
    set.compounds.push_back({"c" + std::to_string(i), testutil::random_fp(rng, 128),
                             rng.normal(6.0, 1.0)});

  const auto path = tmp.path() / "out.csv";
  save_labelled(set, path);
  const LabelledSet back = load_labelled(path, set.l_min);
  REQUIRE(back.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back.compounds[i].id == set.compounds[i].id);
    CHECK(back.compounds[i].fp == set.compounds[i].fp);
    CHECK(back.compounds[i].activity == set.compounds[i].activity);
  }
}

TEST_CASE("standardize_activities: {1,2,3} -> {-1,0,1} with mean 2, sd 1") {
  LabelledSet set;
  set.l_min = 0.0;
  Fingerprint fp(8);
  set.compounds = {{"a", fp, 1.0}, {"b", fp, 2.0}, {"c", fp, 3.0}};

  const auto [standardized, transform] = standardize_activities(set);
  CHECK(transform.mean == doctest::Approx(2.0));
  CHECK(transform.sd == doctest::Approx(1.0));
  CHECK(standardized.compounds[0].activity == doctest::Approx(-1.0));
  CHECK(standardized.compounds[1].activity == doctest::Approx(0.0));
  CHECK(standardized.compounds[2].activity == doctest::Approx(1.0));
}

TEST_CASE("standardized output has sample mean 0 and sd 1") {
  Rng rng(5);
  LabelledSet set;
  set.l_min = -100.0;
  Fingerprint fp(8);
  for (int i = 0; i < 200; ++i)
    set.compounds.push_back({"c" + std::to_string(i), fp, rng.normal(6.25, 0.4)});

  const auto [standardized, transform] = standardize_activities(set);
  const Eigen::VectorXd y = standardized.activities();
  CHECK(std::abs(y.mean()) < 1e-9);
  CHECK(std::abs(sample_sd(y) - 1.0) < 1e-9);

  // Round trip through the transform.
  for (const auto& c : set.compounds) {
    const double z = transform.standardize(c.activity);
    CHECK(std::abs(transform.invert(z) - c.activity) < 1e-12);
  }
}

TEST_CASE("constant activities cannot be standardized") {
  LabelledSet set;
  Fingerprint fp(8);
  set.compounds = {{"a", fp, 2.0}, {"b", fp, 2.0}};
  CHECK_THROWS_AS(standardize_activities(set), DomainError);

  LabelledSet tiny;
  tiny.compounds = {{"a", fp, 2.0}};
  CHECK_THROWS_AS(standardize_activities(tiny), DomainError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "domainrank/errors.hpp"
#include "domainrank/fingerprint.hpp"
#include "test_util.hpp"

using namespace domainrank;

namespace {

Fingerprint from_bits(const std::string& bits) {
  // Pads to the next multiple of 8 with zeros.
  const int p = static_cast<int>((bits.size() + 7) / 8) * 8;
  Fingerprint fp(p);
  for (std::size_t j = 0; j < bits.size(); ++j)
    if (bits[j] == '1') fp.set(static_cast<int>(j));
  return fp;
}

}  // namespace

TEST_CASE("hex encoding places bit j at byte j/8, MSB first") {
  Fingerprint fp(8);
  fp.set(0);
  CHECK(fp.to_hex() == "80");
  fp.set(7);
  CHECK(fp.to_hex() == "81");

  Fingerprint wide(16);
  wide.set(8);
  CHECK(wide.to_hex() == "0080");
}

TEST_CASE("hex round trip is bit-exact") {
  Rng rng(11);
  for (int p : {8, 128, 1024}) {
    for (int trial = 0; trial < 50; ++trial) {
      const Fingerprint fp = testutil::random_fp(rng, p, rng.uniform());
      const Fingerprint back = Fingerprint::from_hex(fp.to_hex());
      CHECK(back == fp);
      CHECK(back.bits() == p);
    }
  }
}

TEST_CASE("malformed hex is rejected") {
  CHECK_THROWS_AS(Fingerprint::from_hex("zz"), IngestError);
  CHECK_THROWS_AS(Fingerprint::from_hex("abc"), IngestError);  // odd length
  CHECK_THROWS_AS(Fingerprint::from_hex(""), IngestError);
  CHECK_THROWS_AS(Fingerprint(12), DomainError);  // not a multiple of 8
}

TEST_CASE("tanimoto distance hand cases") {
  const Fingerprint a = from_bits("1100");
  const Fingerprint b = from_bits("1010");
  CHECK(tanimoto_distance(a, b) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  CHECK(tanimoto_distance(a, a) == 0.0);

  const Fingerprint c = from_bits("0011");
  CHECK(tanimoto_distance(a, c) == 1.0);

  const Fingerprint z1(8), z2(8);
  CHECK(tanimoto_distance(z1, z2) == 0.0);  // identical all-zero vectors

  const Fingerprint long_fp(16);
  CHECK_THROWS_AS(tanimoto_distance(a, long_fp), DimensionError);
}

TEST_CASE("setwise distance is the nearest-neighbour distance") {
  const Fingerprint x = from_bits("1100");
  const Fingerprint a = from_bits("1010");  // d = 2/3
  const Fingerprint b = from_bits("0011");  // d = 1
  const std::vector<Fingerprint> refs{a, b};
  CHECK(setwise_distance(x, refs) == doctest::Approx(2.0 / 3.0));

  const std::vector<Fingerprint> with_self{a, b, x};
  CHECK(setwise_distance(x, with_self) == 0.0);

  const std::vector<Fingerprint> zero_ref{Fingerprint(8)};
  CHECK(setwise_distance(x, zero_ref) == 1.0);

  CHECK_THROWS_AS(setwise_distance(x, std::span<const Fingerprint>{}), DomainError);
}

TEST_CASE("batch matches the naive double loop") {
  Rng rng(7);
  const auto queries = testutil::random_fps(rng, 1000, 128, 0.3);
  const auto refs = testutil::random_fps(rng, 1000, 128, 0.3);

  const auto got = batch_setwise_distances(queries, refs);
  REQUIRE(got.size() == queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    double best = 1.0;
    for (const auto& r : refs)
      best = std::min(best, testutil::naive_tanimoto(queries[i], r));
    CHECK(got[i] == doctest::Approx(best).epsilon(1e-15));
  }
}

TEST_CASE("batch consistency cases") {
  Rng rng(9);
  const auto fps = testutil::random_fps(rng, 50, 128);

  const std::vector<Fingerprint> one{fps[3]};
  CHECK(batch_setwise_distances(one, fps)[0] == setwise_distance(fps[3], fps));

  for (double d : batch_setwise_distances(fps, fps)) CHECK(d == 0.0);
}

TEST_CASE("metric axioms on random triples") {
  Rng rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const Fingerprint x = testutil::random_fp(rng, 128, 0.4);
    const Fingerprint y = testutil::random_fp(rng, 128, 0.4);
    const Fingerprint z = testutil::random_fp(rng, 128, 0.4);

    const double dxy = tanimoto_distance(x, y);
    const double dyx = tanimoto_distance(y, x);
    const double dxz = tanimoto_distance(x, z);
    const double dyz = tanimoto_distance(y, z);

    CHECK(dxy == dyx);
    CHECK(tanimoto_distance(x, x) == 0.0);
    CHECK(dxy >= 0.0);
    CHECK(dxy <= 1.0);
    CHECK(dxz <= dxy + dyz);
  }
}

TEST_CASE("distance 1 iff supports disjoint and one nonzero") {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const Fingerprint a = testutil::random_fp(rng, 64, 0.15);
    const Fingerprint b = testutil::random_fp(rng, 64, 0.15);
    bool disjoint = true;
    for (int j = 0; j < 64; ++j)
      if (a.test(j) && b.test(j)) disjoint = false;
    const bool some_nonzero = a.popcount() + b.popcount() > 0;
    const double d = tanimoto_distance(a, b);
    CHECK((d == 1.0) == (disjoint && some_nonzero));
  }
}

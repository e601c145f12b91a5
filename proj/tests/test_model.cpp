#include "doctest.h"

#include <sstream>

#include "catedrift/model.hpp"
#include "catedrift/rng.hpp"

using namespace catedrift;

namespace {

TimeBatch make_batch(std::int64_t t, int n, int d) {
  TimeBatch batch;
  batch.t = t;
  for (int i = 1; i <= n; ++i) {
    Observation row;
    row.t = t;
    row.subject = i;
    row.y = 0.1 * i;
    row.x.assign(d, 0.5);
    row.z = i % 2;
    batch.rows.push_back(row);
  }
  return batch;
}

}  // namespace

TEST_CASE("well-formed stream is accepted unchanged") {
  const std::vector<TimeBatch> batches{make_batch(1, 2, 3), make_batch(2, 2, 3)};
  StreamMeta meta;
  meta.d = 3;
  const auto& out = validate_stream(batches, meta);
  CHECK(&out == &batches);  // same object, no mutation
  // idempotent: validating again returns the same thing
  CHECK(&validate_stream(out, meta) == &batches);
}

TEST_CASE("time gap is rejected") {
  const std::vector<TimeBatch> batches{make_batch(1, 2, 3), make_batch(3, 2, 3)};
  StreamMeta meta;
  meta.d = 3;
  CHECK_THROWS_AS(validate_stream(batches, meta), StreamError);
  try {
    validate_stream(batches, meta);
  } catch (const StreamError& e) {
    CHECK(e.kind() == StreamErrorKind::NonContiguousTime);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("non-binary treatment is rejected") {
  std::vector<TimeBatch> batches{make_batch(1, 2, 3)};
  batches[0].rows[1].z = 2;
  StreamMeta meta;
  meta.d = 3;
  try {
    validate_stream(batches, meta);
    FAIL("expected StreamError");
  } catch (const StreamError& e) {
    CHECK(e.kind() == StreamErrorKind::NonBinaryTreatment);
  }
}

TEST_CASE("duplicate subject in a batch is rejected") {
  std::vector<TimeBatch> batches{make_batch(1, 2, 3)};
  batches[0].rows[1].subject = 1;
  StreamMeta meta;
  meta.d = 3;
  try {
    validate_stream(batches, meta);
    FAIL("expected StreamError");
  } catch (const StreamError& e) {
    CHECK(e.kind() == StreamErrorKind::DuplicateSubject);
  }
}

TEST_CASE("dimension mismatch is rejected") {
  std::vector<TimeBatch> batches{make_batch(1, 2, 2)};
  StreamMeta meta;
  meta.d = 3;
  try {
    validate_stream(batches, meta);
    FAIL("expected StreamError");
  } catch (const StreamError& e) {
    CHECK(e.kind() == StreamErrorKind::DimensionMismatch);
  }
}

TEST_CASE("non-finite outcome is rejected") {
  std::vector<TimeBatch> batches{make_batch(1, 2, 3)};
  batches[0].rows[0].y = std::numeric_limits<double>::infinity();
  StreamMeta meta;
  meta.d = 3;
  CHECK_THROWS_AS(validate_stream(batches, meta), StreamError);
}

TEST_CASE("ndjson and csv round-trip random streams exactly") {
  SplitRng rng{42};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TimeBatch> batches;
    const int T = 1 + static_cast<int>(rng.next_u64() % 5);
    const int n = 1 + static_cast<int>(rng.next_u64() % 4);
    const int d = 1 + static_cast<int>(rng.next_u64() % 3);
    for (int t = 1; t <= T; ++t) {
      TimeBatch batch;
      batch.t = t;
      for (int i = 1; i <= n; ++i) {
        Observation row;
        row.t = t;
        row.subject = i;
        row.y = rng.next_normal();
        for (int k = 0; k < d; ++k) row.x.push_back(rng.next_uniform());
        row.z = rng.next_bernoulli(0.5);
        batch.rows.push_back(row);
      }
      batches.push_back(batch);
    }

    for (int fmt = 0; fmt < 2; ++fmt) {
      std::stringstream buf;
      if (fmt == 0) {
        write_ndjson(buf, batches);
      } else {
        write_csv(buf, batches);
      }
      const std::vector<TimeBatch> parsed =
          fmt == 0 ? read_ndjson(buf) : read_csv(buf);
      REQUIRE(parsed.size() == batches.size());
      for (std::size_t b = 0; b < batches.size(); ++b) {
        REQUIRE(parsed[b].rows.size() == batches[b].rows.size());
        for (std::size_t r = 0; r < batches[b].rows.size(); ++r) {
          const Observation& a = batches[b].rows[r];
          const Observation& c = parsed[b].rows[r];
          CHECK(a.t == c.t);
          CHECK(a.subject == c.subject);
          CHECK(a.y == doctest::Approx(c.y).epsilon(1e-15));
          CHECK(a.z == c.z);
          REQUIRE(a.x.size() == c.x.size());
          for (std::size_t k = 0; k < a.x.size(); ++k) {
            CHECK(a.x[k] == doctest::Approx(c.x[k]).epsilon(1e-15));
          }
        }
      }
    }
  }
}

#ifndef CATEDRIFT_MODEL_HPP
#define CATEDRIFT_MODEL_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace catedrift {

// One subject's record at time t: outcome y, covariates x, treatment z.
struct Observation {
  std::int64_t t = 0;
  std::int64_t subject = 0;
  double y = 0.0;
  std::vector<double> x;
  int z = 0;
};

// Cross-section of all subjects observed at one time index.
struct TimeBatch {
  std::int64_t t = 0;
  std::vector<Observation> rows;
};

struct StreamMeta {
  int d = 1;                      // covariate dimension
  int n = 0;                      // subjects per period; 0 = infer
  std::vector<double> domain_lo;  // defaults to [0,1]^d when empty
  std::vector<double> domain_hi;
};

enum class StreamErrorKind {
  NonContiguousTime,
  DimensionMismatch,
  DuplicateSubject,
  NonBinaryTreatment,
  NonFiniteValue,
};

class StreamError : public std::runtime_error {
 public:
  StreamError(StreamErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  StreamErrorKind kind() const { return kind_; }

 private:
  StreamErrorKind kind_;
};

// Checks batch invariants and time contiguity against meta; returns the input
// untouched on success, throws StreamError naming the first offending record
// otherwise. Idempotent and non-mutating.
const std::vector<TimeBatch>& validate_stream(const std::vector<TimeBatch>& batches,
                                              const StreamMeta& meta);

// Streaming record formats. NDJSON: one object per line with keys
// t, i, y, x (array), z. CSV: header "t,i,y,x1,...,xd,z".
std::vector<TimeBatch> read_ndjson(std::istream& in);
std::vector<TimeBatch> read_csv(std::istream& in);
void write_ndjson(std::ostream& out, std::span<const TimeBatch> batches);
void write_csv(std::ostream& out, std::span<const TimeBatch> batches);

}  // namespace catedrift

#endif

#ifndef CATEDRIFT_RNG_HPP
#define CATEDRIFT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace catedrift {

// Counter-based splittable generator. Each stream is identified by a key
// folded from an arbitrary tuple of 64-bit components; output word i is a
// stateless mix of (key, i), so streams keyed on (seed, replicate, subject,
// arm) are reproducible independently of thread schedule or draw order
// elsewhere.
class SplitRng {
 public:
  SplitRng() : key_(0) {}

  explicit SplitRng(std::initializer_list<std::uint64_t> key_parts) : key_(0) {
    for (std::uint64_t p : key_parts) key_ = mix(key_ ^ mix(p + kGolden));
  }

  // Derive a child stream; children with distinct salts are independent.
  SplitRng split(std::uint64_t salt) const {
    SplitRng child;
    child.key_ = mix(key_ ^ mix(salt + kGolden));
    return child;
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  // Uniform on (0, 1), 53-bit resolution, never exactly 0 or 1.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; second member of each pair is cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  bool next_bernoulli(double p) { return next_uniform() < p; }

  std::uint64_t key() const { return key_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  // SplitMix64 finalizer (Steele, Lea & Flood 2014 / Vigna 2015).
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace catedrift

#endif

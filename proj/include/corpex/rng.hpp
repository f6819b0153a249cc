#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace corpex {

// 64-bit FNV-1a hash; used to derive named sub-streams from a master seed.
uint64_t fnv1a64(std::string_view s);

// Small deterministic generator built on the splitmix64 mixer.  Not
// cryptographic.  It exists because std::shuffle / std::*_distribution are
// implementation-defined: results produced with this class are reproducible
// bit-for-bit across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Independent sub-stream for a labelled piece of work (one per split
  // class, grid cell, synthetic domain, ...).  Worker scheduling can then
  // never change what any one consumer draws.
  static Rng derive(uint64_t master, std::string_view label);

  uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double next_double();

  // Uniform in [0, bound); unbiased via rejection sampling.  bound == 0
  // returns 0.
  uint64_t below(uint64_t bound);

  // Uniform integer in [lo, hi] inclusive.
  int64_t int_in(int64_t lo, int64_t hi);

  // Box-Muller.
  double normal(double mean, double stddev);

  bool bernoulli(double p) { return next_double() < p; }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(static_cast<uint64_t>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace corpex

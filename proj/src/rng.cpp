#include "corpex/rng.hpp"

#include <cmath>

namespace corpex {

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng Rng::derive(uint64_t master, std::string_view label) {
  Rng r(master ^ fnv1a64(label));
  // One warm-up step so that seeds differing in few bits still diverge
  // immediately.
  r.next_u64();
  return r;
}

uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::below(uint64_t bound) {
  if (bound == 0) return 0;
  // Reject the tail 2^64 mod bound so every residue is equally likely.
  uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

int64_t Rng::int_in(int64_t lo, int64_t hi) {
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;  // hi >= lo expected
  return lo + static_cast<int64_t>(below(span));
}

double Rng::normal(double mean, double stddev) {
  double u1 = 1.0 - next_double();  // (0, 1] so log() is safe
  double u2 = next_double();
  double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * M_PI * u2);
}

}  // namespace corpex

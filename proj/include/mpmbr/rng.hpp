#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace mpmbr {

// Deterministic generator (splitmix64) used everywhere instead of <random>
// engines and distributions, so that streams reproduce bit-for-bit across
// platforms and standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double next_double();

  // Standard normal via Box-Muller on our own uniform bits.
  double next_normal();

  // Uniform index in [0, n). n must be positive.
  size_t next_index(size_t n);

  // In-place Fisher-Yates shuffle of indices [0, n).
  void shuffle(std::vector<size_t>& items);

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

uint64_t fnv1a64(std::string_view s);

// Labeled seed derivation: one top-level seed expands into independent
// per-component streams, e.g.
//   derive_seed(seed, "generate", input_id, entry_index, sample_index)
// Each part (label, strings, integers) is folded into the state with a
// splitmix64 finalizer, so unrelated paths get unrelated streams.
uint64_t seed_mix(uint64_t h, uint64_t v);

inline uint64_t seed_part(uint64_t h, uint64_t v) { return seed_mix(h, v); }
inline uint64_t seed_part(uint64_t h, std::string_view s) {
  return seed_mix(h, fnv1a64(s));
}
inline uint64_t seed_part(uint64_t h, const char* s) {
  return seed_mix(h, fnv1a64(s));
}

template <typename... Parts>
uint64_t derive_seed(uint64_t base, std::string_view label, Parts... parts) {
  uint64_t h = seed_part(base, label);
  ((h = seed_part(h, parts)), ...);
  return h;
}

}  // namespace mpmbr

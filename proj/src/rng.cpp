#include "mpmbr/rng.hpp"

#include <cmath>

namespace mpmbr {

namespace {

inline uint64_t splitmix64_step(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

uint64_t Rng::next_u64() { return splitmix64_step(state_); }

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - next_double();
  double u2 = next_double();
  double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(kTwoPi * u2);
  have_spare_ = true;
  return mag * std::cos(kTwoPi * u2);
}

size_t Rng::next_index(size_t n) {
  // Modulo bias is ~n/2^64, irrelevant next to the determinism we need.
  return static_cast<size_t>(next_u64() % static_cast<uint64_t>(n));
}

void Rng::shuffle(std::vector<size_t>& items) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = next_index(i);
    std::swap(items[i - 1], items[j]);
  }
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t seed_mix(uint64_t h, uint64_t v) {
  uint64_t x = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  return splitmix64_step(x);
}

}  // namespace mpmbr

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sempaste {

// Pseudo-random stream with a fixed draw algorithm. Every random decision in
// the pipeline goes through one of these helpers so that a (seed, epoch,
// image_id) triple replays to the same bytes on any build; the std::
// distributions are avoided because their draw counts are implementation
// defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in {0, ..., n-1} via rejection, unbiased.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // +1 or -1, equiprobable.
  int pick_sign() { return (gen_() & 1) ? 1 : -1; }

 private:
  std::mt19937_64 gen_;
};

// splitmix64, used to turn structured keys into seeds.
inline std::uint64_t mix_u64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_str(std::string_view s) {
  // FNV-1a 64.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Per-image stream derivation: hash(global seed, epoch, image id). Streams
// are independent of worker scheduling by construction.
inline RngStream derive_stream(std::uint64_t seed, std::int64_t epoch,
                               std::string_view image_id) {
  std::uint64_t h = mix_u64(seed);
  h = mix_u64(h ^ static_cast<std::uint64_t>(epoch));
  h = mix_u64(h ^ hash_str(image_id));
  return RngStream(h);
}

}  // namespace sempaste

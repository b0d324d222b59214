#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// deterministic backbone shared by every module: FNV-1a digests, the
// digest-to-unit-interval map, and the seeded shuffle used for splits
// and minibatch sampling

namespace promptforge {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = kFnvOffsetBasis;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

// h / 2^64 truncated to the top 53 bits; truncation (rather than a
// round-to-nearest cast) keeps the result strictly below 1.0 for all h
inline double uniform01(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1p-53;
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : x_(seed) {}

  std::uint64_t next() noexcept {
    x_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t x_;
};

// Fisher-Yates over [0, n) driven by SplitMix64; position i swaps with
// next() % (i + 1), i counting down from n - 1
inline std::vector<std::size_t> seeded_permutation(std::size_t n,
                                                   std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = n; i-- > 1;) {
    auto j = static_cast<std::size_t>(rng.next() % (i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

// stage-specific sub-seed: fnv1a64("<seed>\x1f<tag>")
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::string key = std::to_string(seed);
  key += '\x1f';
  key += tag;
  return fnv1a64(key);
}

inline std::string to_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace promptforge

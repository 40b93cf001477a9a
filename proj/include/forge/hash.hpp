#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace forge {

// Seeded 64-bit MurmurHash64A. Stable across platforms and runs, which is
// what shingle hashing, band keys, sampling and config digests require.
std::uint64_t hash64(std::string_view bytes, std::uint64_t seed) noexcept;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed and a stream tag.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept {
  return splitmix64(master ^ splitmix64(tag));
}

// Counter-mode generator: the k-th draw is splitmix64(seed + k * gamma).
// The output sequence is fully specified here, unlike std:: distributions.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept;

  // Uniform double in [0, 1) with 53 random bits.
  double unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

std::string hex64(std::uint64_t value);

}  // namespace forge

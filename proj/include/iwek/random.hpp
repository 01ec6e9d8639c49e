#ifndef IWEK_RANDOM_HPP
#define IWEK_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace iwek {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent sub-seed from a parent seed and a sequence of tags.
// Sub-streams keyed by name (not position) stay stable when siblings are
// added or removed.
inline std::uint64_t derive_seed(std::uint64_t seed) { return mix64(seed); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, Rest... rest);

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, Rest... rest) {
  return derive_seed(mix64(seed ^ mix64(tag + 0x632be59bd9b4e019ULL)), rest...);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, Rest... rest) {
  return derive_seed(mix64(seed ^ hash_string(tag)), rest...);
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  // Fisher-Yates with explicit draws so the result is independent of the
  // standard library's std::shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

// Uniform in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; portable across standard libraries unlike std::normal_distribution.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::size_t uniform_index(std::size_t n, Rng& rng) {
  return static_cast<std::size_t>(rng() % n);
}

}  // namespace iwek

#endif  // IWEK_RANDOM_HPP

#pragma once
// Seeded randomness. The engine is std::mt19937_64 (fully specified by the
// standard); distributions come from Boost.Random, whose algorithms are fixed
// across platforms, unlike the std:: distributions.

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace augsum {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return boost::random::uniform_01<double>()(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double normal(Rng& rng, double mean, double stddev) {
  return boost::random::normal_distribution<double>(mean, stddev)(rng);
}

inline double beta(Rng& rng, double alpha, double beta_param) {
  return boost::random::beta_distribution<double>(alpha, beta_param)(rng);
}

/// FNV-1a, used where a stable (non-std::hash) string hash is needed.
inline std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

/// splitmix64 finalizer; turns (seed, counter) pairs into independent seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[uniform_index(rng, i)]);
}

}  // namespace augsum

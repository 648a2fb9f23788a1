#pragma once

#include "dsbo/types.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace dsbo {

/// Disjoint randomness streams. Every random draw in a run is keyed by one of
/// these plus (iteration, agent), so results never depend on call order.
enum class Stream : std::uint8_t {
  grad_f = 1,
  grad_g = 2,
  topology = 3,
  init = 4,
  dataset = 5,
};

std::string_view to_string(Stream s);

/// Counter-based key: the base seed plus an injective packing of
/// (iteration: 40 bits, agent: 20 bits, stream: 4 bits).
struct DrawKey {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  friend bool operator==(const DrawKey&, const DrawKey&) = default;
};

inline constexpr std::uint64_t kMaxIteration = (std::uint64_t{1} << 40) - 1;
inline constexpr std::uint64_t kMaxAgent = (std::uint64_t{1} << 20) - 1;

DrawKey derive_draw_key(std::uint64_t base_seed, std::uint64_t k, std::uint64_t agent, Stream stream);

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Generator seeded from a key. `substream` separates independent vectors
/// drawn under the same key (e.g. the x-block and y-block noise).
std::mt19937_64 make_engine(const DrawKey& key, std::uint64_t substream = 0);

/// Fills a vector with i.i.d. N(0, stddev^2) entries.
Vec gaussian_vector(std::mt19937_64& engine, Eigen::Index dim, double stddev);

}  // namespace dsbo

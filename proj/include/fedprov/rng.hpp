#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedprov {

using Rng = std::mt19937_64;

/// Seed of an independent substream identified by (master, tag, index).
/// Stable across runs and platforms.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(master, tag, index));
}

/// Uniform draw from [0, 1) using the top 53 bits of one engine output.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling, so unbiased.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Standard normal draw (Marsaglia polar method).
double standard_normal(Rng& rng);

/// Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// 0, 1, ..., n-1 in shuffled order.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace fedprov

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace genspec {

using Rng = std::mt19937_64;

// The std distributions are implementation-defined; these are not, so a seed
// reproduces the same stream with any standard library.

/// Uniform integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform_unit(Rng& rng);

/// Standard normal draw (Box-Muller, one value per call).
double standard_normal(Rng& rng);

/// Independent sub-stream seed for (seed, name, index).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

}  // namespace genspec

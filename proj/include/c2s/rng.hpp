#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace c2s {

using Rng = std::mt19937_64;

// Seeds an independent generator for a named substream of a base seed, so
// that drawing more from one stream never shifts another.
Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

}  // namespace c2s

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lepm {

using Rng = std::mt19937_64;

/// Derives an independent generator for a named component from the master
/// seed, so that draws in one component never shift another's.
Rng substream(std::uint64_t master_seed, std::string_view name);

}  // namespace lepm

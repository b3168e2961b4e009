#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace odm {

using Rng = std::mt19937_64;

/// Recorded in run manifests so outputs can be regenerated.
inline constexpr std::string_view kRngName = "mt19937_64 seeded by splitmix64(seed ^ fnv1a64(stream))";

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

/// Independent generator for one (purpose, seed) pair, e.g. make_rng(seed, "synthdata.noise").
Rng make_rng(std::uint64_t seed, std::string_view stream);

}  // namespace odm

#pragma once

#include <cstdint>
#include <random>

namespace hdeu {

using Rng = std::mt19937_64;

/// Stream domains, so that model draws and replication draws never overlap.
enum class StreamDomain : std::uint64_t { MODEL = 1, DATA = 2, AUX = 3 };

std::uint64_t splitmix64(std::uint64_t x);

/// Independent generator for (seed, domain, index). Identical arguments give
/// identical streams regardless of thread or call order.
Rng make_stream(std::uint64_t seed, StreamDomain domain, std::uint64_t index);

}  // namespace hdeu

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace oed {

using Rng = std::mt19937_64;

// FNV-1a; stable across platforms and runs.
std::uint64_t hash_string(std::string_view text) noexcept;

/// Mixes a sequence of words into a single 64-bit seed with splitmix64
/// finalization. The result depends on order and on every element, so
/// seeds for (master, set, m, iteration, role) tuples never collide in
/// practice and do not depend on execution order.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept;

}  // namespace oed

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace iidwb {

/// The random source used throughout the workbench. All randomness flows
/// from explicitly seeded instances; nothing reads global state.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent child seed from a parent seed and a list of
/// stream coordinates. Used as a counter-based splitting scheme: the seed of
/// task (a, b, c) depends only on (parent, a, b, c), never on execution order.
std::uint64_t derive_seed(std::uint64_t parent,
                          std::initializer_list<std::uint64_t> coords) noexcept;

/// Stable 64-bit hash of a short tag, for naming streams ("scm", "env", ...).
std::uint64_t tag(std::string_view name) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

inline Rng make_rng(std::uint64_t parent,
                    std::initializer_list<std::uint64_t> coords) {
  return Rng(derive_seed(parent, coords));
}

/// FNV-1a over raw bytes; used for config and batch fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t h = 0xcbf29ce484222325ULL) noexcept;

}  // namespace iidwb

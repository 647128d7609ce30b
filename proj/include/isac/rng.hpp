// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace isac {

// splitmix64 finalizer; used to derive independent streams from one seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  return mix64(mix64(mix64(base ^ mix64(tag)) ^ mix64(a)) ^ mix64(b));
}

inline std::mt19937_64 make_rng(std::uint64_t base, std::uint64_t tag,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
  return std::mt19937_64(derive_seed(base, tag, a, b));
}

// Stream tags for the per-frame noise grid. Method-independent streams keep
// paired runs (same seed, different allocation method) on identical noise
// realizations.
namespace stream {
inline constexpr std::uint64_t scenario = 0x5343454eull;     // "SCEN"
inline constexpr std::uint64_t ekf_init = 0x494e4954ull;     // "INIT"
inline constexpr std::uint64_t process = 0x50524f43ull;      // "PROC"
inline constexpr std::uint64_t measurement = 0x4d454153ull;  // "MEAS"
inline constexpr std::uint64_t channel = 0x4348414eull;      // "CHAN"
inline constexpr std::uint64_t rftep = 0x52465445ull;        // "RFTE"
} // namespace stream

} // namespace isac

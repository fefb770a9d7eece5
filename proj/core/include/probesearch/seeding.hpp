// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Platform-stable hashing used to derive per-item seeds. std::hash is not
// stable across implementations, so seeds are built from these instead.

#include <cstdint>
#include <string_view>

namespace probesearch::seeding {

constexpr std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix(h);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix(h ^ (mix(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

constexpr std::uint64_t combine(std::uint64_t h, std::string_view s) { return combine(h, hash_string(s)); }

template <class... Rest>
constexpr std::uint64_t derive(std::uint64_t seed, Rest... rest) {
  std::uint64_t h = mix(seed);
  ((h = combine(h, rest)), ...);
  return h;
}

// Uniform double in [0, 1) from a hash value.
constexpr double unit_interval(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace probesearch::seeding

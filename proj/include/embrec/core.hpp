// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

// Bit-reproducible primitives: PRNG, binary16 conversion, CRC-32.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace embrec {

/// splitmix64 generator. A plain value: copying it forks an identical stream.
class Rng {
 public:
  explicit constexpr Rng(std::uint64_t seed = 0) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// lo + (hi - lo) * next() / 2^64, evaluated in double and rounded to
  /// float. The result always lies in [lo, hi). Throws kInvalid if lo >= hi.
  float uniform(double lo, double hi);

  constexpr std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

enum class Dtype : std::uint8_t { kF32 = 0, kF16 = 1 };

std::size_t bytes_per_element(Dtype dtype);
std::string_view to_string(Dtype dtype);
// Accepts "f32" / "f16"; anything else is kInvalid.
Dtype parse_dtype(std::string_view name);

// IEEE-754 binary16, round to nearest even. Overflow goes to signed infinity,
// tiny values to signed subnormals or zero. NaN stays NaN.
std::uint16_t f32_to_f16(float x);
float f16_to_f32(std::uint16_t bits);

// CRC-32 (IEEE 802.3, reflected 0xEDB88320, init and final xor 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);
std::uint32_t crc32(std::string_view text);
// Continues a running CRC; crc32_update(0, bytes) == crc32(bytes).
std::uint32_t crc32_update(std::uint32_t crc, std::span<const std::uint8_t> bytes);

}  // namespace embrec

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace detnet {

// All configuration durations are integer microseconds; the simulator runs on
// integer nanoseconds. Keeping both integral is what makes cycle arithmetic
// exact (no epsilon anywhere in the alignment math).
using Microseconds = std::int64_t;
using Nanoseconds = std::int64_t;
using BitsPerSecond = std::int64_t;
using Bits = std::int64_t;

using NodeId = std::string;
using DomainId = std::string;

inline constexpr Nanoseconds kNsPerUs = 1000;

// Floor/ceil division toward -inf/+inf for any sign of a; b must be positive.
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return -floor_div(-a, b);
}

// a mod b mapped into [0, b).
inline std::int64_t positive_mod(std::int64_t a, std::int64_t b) {
  std::int64_t m = a % b;
  return m < 0 ? m + b : m;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b);

// lcm with an explicit cap; throws std::overflow_error("hypercycle overflow")
// when the running lcm would exceed cap.
std::int64_t lcm_capped(std::int64_t a, std::int64_t b, std::int64_t cap);

}  // namespace detnet

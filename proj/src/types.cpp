#include "detnet/types.hpp"

#include <numeric>

namespace detnet {

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  return std::gcd(a, b);
}

std::int64_t lcm_capped(std::int64_t a, std::int64_t b, std::int64_t cap) {
  if (a <= 0 || b <= 0) throw std::invalid_argument("lcm of non-positive value");
  std::int64_t g = std::gcd(a, b);
  std::int64_t q = a / g;
  if (q > cap / b) throw std::overflow_error("hypercycle overflow");
  return q * b;
}

}  // namespace detnet

#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nqkx/rng.hpp"

namespace nqkx {

// Arbitrary-precision nonnegative integer. Exponents in the protocols run
// up to 2^n - 1, far past any machine word.
using Nat = boost::multiprecision::cpp_int;

inline std::size_t bit_length(const Nat& x) {
  if (x == 0) return 0;
  return boost::multiprecision::msb(x) + 1;
}

inline bool bit_of(const Nat& x, std::size_t i) {
  return boost::multiprecision::bit_test(x, static_cast<unsigned>(i));
}

// Uniform in [0, bound), bound > 0. Rejection sampling on the bit length.
inline Nat nat_below(Rng& rng, const Nat& bound) {
  if (bound <= 0) throw std::invalid_argument("nat_below: bound must be positive");
  const std::size_t bits = bit_length(bound);
  const std::size_t words = (bits + 63) / 64;
  for (;;) {
    Nat x = 0;
    for (std::size_t w = 0; w < words; ++w) {
      x <<= 64;
      x += rng.word();
    }
    x >>= words * 64 - bits;
    if (x < bound) return x;
  }
}

// Uniform in [lo, hi], lo <= hi.
inline Nat nat_between(Rng& rng, const Nat& lo, const Nat& hi) {
  if (lo > hi) throw std::invalid_argument("nat_between: empty range");
  return lo + nat_below(rng, hi - lo + 1);
}

// Little-endian magnitude bytes, minimal (no trailing zero byte; empty for 0).
inline std::vector<std::uint8_t> nat_to_bytes(const Nat& x) {
  std::vector<std::uint8_t> out;
  Nat t = x;
  while (t > 0) {
    out.push_back(static_cast<std::uint8_t>(t & 0xff));
    t >>= 8;
  }
  return out;
}

inline Nat nat_from_bytes(const std::uint8_t* data, std::size_t len) {
  Nat x = 0;
  for (std::size_t i = len; i-- > 0;) {
    x <<= 8;
    x += data[i];
  }
  return x;
}

}  // namespace nqkx

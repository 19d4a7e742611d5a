#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "nqkx/nat.hpp"

namespace nqkx {

// Polynomials over GF(2), packed as integers: bit i is the coefficient of
// x^i. Only small degrees appear here (the C-block factors), so plain
// shift-and-xor arithmetic is plenty.
namespace gf2poly {

using Poly = Nat;

inline int degree(const Poly& p) {
  if (p == 0) return -1;
  return static_cast<int>(bit_length(p)) - 1;
}

inline Poly mod(Poly a, const Poly& p) {
  const int dp = degree(p);
  for (int da = degree(a); da >= dp; da = degree(a))
    a ^= p << (da - dp);
  return a;
}

inline Poly mulmod(const Poly& a, const Poly& b, const Poly& p) {
  Poly acc = 0;
  Poly shifted = mod(a, p);
  const std::size_t nb = bit_length(b);
  for (std::size_t i = 0; i < nb; ++i) {
    if (bit_of(b, i)) acc ^= shifted;
    shifted <<= 1;
    if (degree(shifted) >= degree(p)) shifted ^= p;
  }
  return acc;
}

inline Poly powmod(Poly base, Nat e, const Poly& p) {
  Poly result = 1;
  base = mod(base, p);
  while (e > 0) {
    if (bit_of(e, 0)) result = mulmod(result, base, p);
    base = mulmod(base, base, p);
    e >>= 1;
  }
  return result;
}

inline Poly gcd(Poly a, Poly b) {
  while (b != 0) {
    a = mod(a, b);
    std::swap(a, b);
  }
  return a;
}

inline std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t q = 2; q * q <= n; q += (q == 2 ? 1 : 2)) {
    if (n % q == 0) {
      out.push_back(q);
      while (n % q == 0) n /= q;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

// Rabin irreducibility test.
inline bool is_irreducible(const Poly& p) {
  const int d = degree(p);
  if (d < 1) return false;
  if (d == 1) return true;
  const Poly x = 2;
  for (std::uint64_t q : prime_factors(static_cast<std::uint64_t>(d))) {
    Poly h = powmod(x, Nat(1) << static_cast<unsigned>(d / q), p);
    if (gcd(h ^ x, p) != 1) return false;
  }
  return powmod(x, Nat(1) << static_cast<unsigned>(d), p) == x;
}

// Lexicographically smallest irreducible polynomial of the given degree
// with nonzero constant term (the constant term 1 keeps the order odd).
inline Poly smallest_irreducible(int deg) {
  if (deg < 1) throw std::invalid_argument("degree must be >= 1");
  const Poly lead = Poly(1) << static_cast<unsigned>(deg);
  for (Poly low = 1; low < lead; low += 2) {
    Poly cand = lead | low;
    if (is_irreducible(cand)) return cand;
  }
  throw std::logic_error("no irreducible polynomial found");  // unreachable
}

// Multiplicative order of x in GF(2)[x]/(p) for irreducible p with
// constant term 1: divides 2^deg - 1, so factor that and strip primes.
// Trial division caps the workable degree; callers supply known_order
// beyond it.
inline constexpr int kMaxOrderDegree = 40;

inline std::uint64_t order_of_x(const Poly& p) {
  const int d = degree(p);
  if (d < 1 || !bit_of(p, 0))
    throw std::invalid_argument("order_of_x: need degree >= 1 and constant term 1");
  if (d > kMaxOrderDegree)
    throw std::invalid_argument(
        "order_of_x: degree too large for trial-division factoring; "
        "supply known_order");
  if (d == 1) return 1;  // p = x + 1, x = 1 in the quotient
  const std::uint64_t e = (d == 63) ? ~std::uint64_t{0} >> 1
                                    : (std::uint64_t{1} << d) - 1;
  std::uint64_t r = e;
  for (std::uint64_t q : prime_factors(e)) {
    while (r % q == 0 && powmod(2, Nat(r / q), p) == 1) r /= q;
  }
  return r;
}

}  // namespace gf2poly
}  // namespace nqkx

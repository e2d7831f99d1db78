#pragma once

#include <cstdint>

namespace hedb {

using u128 = unsigned __int128;

// Arithmetic in Z_p for the Mersenne prime p = 2^127 - 1. Every non-zero
// residue is invertible, which the multiplicative scheme relies on.
struct Mersenne127 {
  static constexpr u128 kP = (static_cast<u128>(1) << 127) - 1;

  static constexpr u128 reduce(u128 x) {
    x = (x & kP) + (x >> 127);
    return x >= kP ? x - kP : x;
  }
  static constexpr u128 add(u128 a, u128 b) { return reduce(a + b); }
  static constexpr u128 sub(u128 a, u128 b) { return a >= b ? a - b : kP - (b - a); }
  static constexpr u128 neg(u128 a) { return a == 0 ? 0 : kP - a; }

  static constexpr u128 mul(u128 a, u128 b) {
    // 128x128 -> 256 via 64-bit limbs, then fold the high part (2^127 == 1).
    const std::uint64_t a0 = static_cast<std::uint64_t>(a), a1 = static_cast<std::uint64_t>(a >> 64);
    const std::uint64_t b0 = static_cast<std::uint64_t>(b), b1 = static_cast<std::uint64_t>(b >> 64);
    const u128 p00 = static_cast<u128>(a0) * b0;
    const u128 p01 = static_cast<u128>(a0) * b1;
    const u128 p10 = static_cast<u128>(a1) * b0;
    const u128 p11 = static_cast<u128>(a1) * b1;
    u128 mid = (p00 >> 64) + static_cast<std::uint64_t>(p01) + static_cast<std::uint64_t>(p10);
    const u128 lo = (mid << 64) | static_cast<std::uint64_t>(p00);
    const u128 hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    // value = hi * 2^128 + lo = 2*hi*2^127 + lo == 2*hi + lo (mod p)
    u128 r = reduce(lo);
    r = add(r, reduce(hi));
    r = add(r, reduce(hi));
    return r;
  }

  static constexpr u128 pow(u128 base, u128 exp) {
    u128 result = 1;
    base = reduce(base);
    while (exp) {
      if (exp & 1) result = mul(result, base);
      base = mul(base, base);
      exp >>= 1;
    }
    return result;
  }

  // Caller guarantees a != 0.
  static constexpr u128 inv(u128 a) { return pow(a, kP - 2); }
};

}  // namespace hedb

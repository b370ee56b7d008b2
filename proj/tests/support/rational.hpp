#pragma once

// Exact rational scalar for running the flow engine without rounding.
// Intermediate products use __int128; overflow of the reduced result throws,
// which simply limits how big an input the exact mode can digest.

#include <numeric>
#include <stdexcept>

#include "tvflow/detail/flow_engine.hpp"

namespace testsupport {

struct Rat {
  long long n = 0;
  long long d = 1;

  Rat() = default;
  Rat(long long v) : n(v), d(1) {}  // NOLINT: implicit by design
  Rat(long long nn, long long dd) : n(nn), d(dd) { normalize(); }

  void normalize() {
    if (d == 0) throw std::domain_error("Rat: zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const long long g = std::gcd(n < 0 ? -n : n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
  }

  static Rat reduce128(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("Rat: zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      n /= a;
      d /= a;
    }
    constexpr __int128 lim = static_cast<__int128>(9223372036854775807LL);
    if (n > lim || n < -lim || d > lim) throw std::overflow_error("Rat: overflow");
    Rat r;
    r.n = static_cast<long long>(n);
    r.d = static_cast<long long>(d);
    return r;
  }

  friend Rat operator+(const Rat& a, const Rat& b) {
    return reduce128(static_cast<__int128>(a.n) * b.d + static_cast<__int128>(b.n) * a.d,
                     static_cast<__int128>(a.d) * b.d);
  }
  friend Rat operator-(const Rat& a, const Rat& b) {
    return reduce128(static_cast<__int128>(a.n) * b.d - static_cast<__int128>(b.n) * a.d,
                     static_cast<__int128>(a.d) * b.d);
  }
  friend Rat operator*(const Rat& a, const Rat& b) {
    return reduce128(static_cast<__int128>(a.n) * b.n, static_cast<__int128>(a.d) * b.d);
  }
  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.n == 0) throw std::domain_error("Rat: division by zero");
    return reduce128(static_cast<__int128>(a.n) * b.d, static_cast<__int128>(a.d) * b.n);
  }
  friend bool operator==(const Rat& a, const Rat& b) { return a.n == b.n && a.d == b.d; }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b) {
    return static_cast<__int128>(a.n) * b.d < static_cast<__int128>(b.n) * a.d;
  }
  friend bool operator>(const Rat& a, const Rat& b) { return b < a; }
  friend bool operator<=(const Rat& a, const Rat& b) { return !(b < a); }
  friend bool operator>=(const Rat& a, const Rat& b) { return !(a < b); }

  double to_double() const { return static_cast<double>(n) / static_cast<double>(d); }
};

}  // namespace testsupport

namespace tvflow::detail {

template <>
struct scalar_traits<testsupport::Rat> {
  static testsupport::Rat tie_rel() { return testsupport::Rat(0); }
};

}  // namespace tvflow::detail

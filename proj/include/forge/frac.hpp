#pragma once

#include <charconv>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "forge/common.hpp"

namespace forge {

// Exact rational with canonical form: den > 0, gcd(|num|, den) == 1.
// Intermediates go through 128-bit arithmetic; results must fit in 64 bits.
struct Frac {
  long long num = 0;
  long long den = 1;

  constexpr Frac() = default;
  Frac(long long n, long long d) {
    if (d == 0) throw ValidationError("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const long long g = std::gcd(n < 0 ? -n : n, d);
    num = g ? n / g : 0;
    den = g ? d / g : 1;
  }
  explicit Frac(long long n) : num(n), den(1) {}

  static Frac reduce128(__int128 n, __int128 d) {
    if (d == 0) throw ValidationError("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 a = n < 0 ? -n : n, b = d;
    while (b) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a) {
      n /= a;
      d /= a;
    }
    constexpr __int128 lo = -static_cast<__int128>(INT64_MAX) - 1;
    if (n < lo || n > INT64_MAX || d > INT64_MAX)
      throw ValidationError("rational overflow");
    Frac f;
    f.num = static_cast<long long>(n);
    f.den = static_cast<long long>(d);
    return f;
  }

  friend Frac operator+(Frac a, Frac b) {
    return reduce128(static_cast<__int128>(a.num) * b.den +
                         static_cast<__int128>(b.num) * a.den,
                     static_cast<__int128>(a.den) * b.den);
  }
  friend Frac operator-(Frac a, Frac b) {
    return reduce128(static_cast<__int128>(a.num) * b.den -
                         static_cast<__int128>(b.num) * a.den,
                     static_cast<__int128>(a.den) * b.den);
  }
  friend Frac operator*(Frac a, Frac b) {
    return reduce128(static_cast<__int128>(a.num) * b.num,
                     static_cast<__int128>(a.den) * b.den);
  }
  friend Frac operator/(Frac a, Frac b) {
    if (b.num == 0) throw ValidationError("rational division by zero");
    return reduce128(static_cast<__int128>(a.num) * b.den,
                     static_cast<__int128>(a.den) * b.num);
  }
  Frac operator-() const {
    Frac f;
    f.num = -num;
    f.den = den;
    return f;
  }

  friend bool operator==(Frac a, Frac b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator!=(Frac a, Frac b) { return !(a == b); }
  friend bool operator<(Frac a, Frac b) {
    return static_cast<__int128>(a.num) * b.den <
           static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator>(Frac a, Frac b) { return b < a; }
  friend bool operator<=(Frac a, Frac b) { return !(b < a); }
  friend bool operator>=(Frac a, Frac b) { return !(a < b); }

  Frac abs() const { return num < 0 ? -*this : *this; }

  // Representative in [0, 1): x - floor(x).
  Frac mod1() const {
    long long r = num % den;
    if (r < 0) r += den;
    Frac f;
    f.num = r;
    f.den = den;
    const long long g = std::gcd(f.num, f.den);
    if (g > 1) {
      f.num /= g;
      f.den /= g;
    }
    return f;
  }

  double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  std::string str() const {
    return den == 1 ? std::to_string(num)
                    : std::to_string(num) + "/" + std::to_string(den);
  }

  // Accepts "a" or "a/b" with optional surrounding spaces.
  static Frac parse(std::string_view s) {
    const auto trim = [](std::string_view v) {
      while (!v.empty() && (v.front() == ' ' || v.front() == '\t'))
        v.remove_prefix(1);
      while (!v.empty() && (v.back() == ' ' || v.back() == '\t'))
        v.remove_suffix(1);
      return v;
    };
    const auto to_ll = [](std::string_view v) {
      long long out = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc{} || p != v.data() + v.size())
        throw ValidationError("bad rational literal \"" + std::string(v) + "\"");
      return out;
    };
    s = trim(s);
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return Frac(to_ll(s));
    return Frac(to_ll(trim(s.substr(0, slash))),
                to_ll(trim(s.substr(slash + 1))));
  }
};

}  // namespace forge

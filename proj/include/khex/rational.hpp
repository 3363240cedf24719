#pragma once
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace khex {

// Minimal exact rational on int64, enough for the critical-radius arithmetic.
struct Rational {
  int64_t num = 0;
  int64_t den = 1;

  Rational() = default;
  Rational(int64_t n, int64_t d = 1) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("rational: zero denominator");
    if (den < 0) { num = -num; den = -den; }
    int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  bool is_integer() const { return den == 1; }
  double value() const { return double(num) / double(den); }

  // floor division works for negative numerators too
  int64_t floor() const {
    int64_t q = num / den;
    if (num % den != 0 && num < 0) --q;
    return q;
  }

  Rational operator-(const Rational& o) const {
    return Rational(num * o.den - o.num * den, den * o.den);
  }
  Rational operator+(const Rational& o) const {
    return Rational(num * o.den + o.num * den, den * o.den);
  }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  bool operator<(const Rational& o) const { return num * o.den < o.num * den; }

  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }
};

}  // namespace khex

#pragma once

#include <cctype>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "sgdim/error.hpp"

namespace sgdim {

/// Exact non-negative-denominator fraction. Degrees and the bookkeeping
/// identity delta * n are compared in integers, never in floating point.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) {
    if (den == 0) throw PreconditionError("rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    num_ = g == 0 ? 0 : num / g;
    den_ = g == 0 ? 1 : den / g;
  }

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator*(const Rational& a, const Rational& b) {
    return reduce(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw PreconditionError("rational: division by zero");
    return reduce(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  friend bool operator==(const Rational& a, const Rational& b) noexcept {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator<(const Rational& a, const Rational& b) noexcept {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }
  friend bool operator<=(const Rational& a, const Rational& b) noexcept { return !(b < a); }

  /// Smallest integer >= this.
  std::int64_t ceil() const noexcept {
    if (num_ >= 0) return (num_ + den_ - 1) / den_;
    return -((-num_) / den_);
  }
  std::int64_t floor() const noexcept {
    if (num_ >= 0) return num_ / den_;
    return -((-num_ + den_ - 1) / den_);
  }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

  /// Accepts `p`, `p/q` and plain or scientific decimals such as `0.25` or
  /// `2.5e-1`; decimals are converted exactly.
  static Rational parse(std::string_view text) {
    auto bad = [&] { return PreconditionError("rational: cannot parse '" + std::string(text) + "'"); };
    if (text.empty()) throw bad();
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      return Rational(parse_int(text.substr(0, slash), bad), parse_int(text.substr(slash + 1), bad));
    }
    std::size_t pos = 0;
    bool negative = false;
    if (text[pos] == '+' || text[pos] == '-') negative = text[pos++] == '-';
    __int128 mantissa = 0;
    int scale = 0;
    int digits = 0;
    bool seen_point = false;
    for (; pos < text.size(); ++pos) {
      const char c = text[pos];
      if (c == '.' && !seen_point) {
        seen_point = true;
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        if (++digits > 18) throw bad();
        mantissa = mantissa * 10 + (c - '0');
        if (seen_point) --scale;
      } else {
        break;
      }
    }
    if (digits == 0) throw bad();
    if (pos < text.size()) {
      if (text[pos] != 'e' && text[pos] != 'E') throw bad();
      scale += static_cast<int>(parse_int(text.substr(pos + 1), bad));
    }
    __int128 den = 1;
    for (; scale > 0; --scale) {
      mantissa *= 10;
      if (mantissa > INT64_MAX) throw bad();
    }
    for (; scale < 0; ++scale) {
      den *= 10;
      if (den > INT64_MAX) throw bad();
    }
    return reduce(negative ? -mantissa : mantissa, den);
  }

 private:
  static Rational reduce(__int128 num, __int128 den) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    __int128 a = num < 0 ? -num : num;
    __int128 b = den;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      num /= a;
      den /= a;
    }
    if (num > INT64_MAX || num < -INT64_MAX || den > INT64_MAX) throw PreconditionError("rational: overflow");
    return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
  }

  template <class Bad>
  static std::int64_t parse_int(std::string_view s, Bad bad) {
    if (s.empty()) throw bad();
    std::size_t pos = 0;
    bool negative = false;
    if (s[0] == '+' || s[0] == '-') negative = s[pos++] == '-';
    if (pos == s.size() || s.size() - pos > 18) throw bad();
    std::int64_t v = 0;
    for (; pos < s.size(); ++pos) {
      if (!std::isdigit(static_cast<unsigned char>(s[pos]))) throw bad();
      v = v * 10 + (s[pos] - '0');
    }
    return negative ? -v : v;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace sgdim

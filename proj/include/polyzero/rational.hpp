#pragma once

#include <cstdint>
#include <compare>
#include <string>

#include "polyzero/errors.hpp"

namespace polyzero {

/// Exact rational with 64-bit numerator and denominator, kept normalized so
/// that den > 0 and gcd(|num|, den) == 1. Products and sums run through
/// 128-bit intermediates; a value that does not fit back into 64 bits after
/// reduction throws DomainError.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(long long n) : num_(n), den_(1) {}  // NOLINT: implicit by design
  Rational(long long n, long long d);

  long long num() const { return num_; }
  long long den() const { return den_; }

  Rational operator-() const { return Rational(-num_, den_); }
  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  bool operator==(const Rational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  std::strong_ordering operator<=>(const Rational& o) const;

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }
  /// "7/3" when den != 1, otherwise just the integer.
  std::string str() const;

 private:
  static Rational make(__int128 n, __int128 d);
  long long num_;
  long long den_;
};

}  // namespace polyzero

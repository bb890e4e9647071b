#include "polyzero/rational.hpp"

#include <limits>

namespace polyzero {

namespace {

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace

Rational Rational::make(__int128 n, __int128 d) {
  if (d == 0) throw DomainError("rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  constexpr __int128 lo = std::numeric_limits<long long>::min();
  constexpr __int128 hi = std::numeric_limits<long long>::max();
  if (n < lo || n > hi || d > hi)
    throw DomainError("rational: 64-bit overflow after reduction");
  Rational r;
  r.num_ = static_cast<long long>(n);
  r.den_ = static_cast<long long>(d);
  return r;
}

Rational::Rational(long long n, long long d) { *this = make(n, d); }

Rational Rational::operator+(const Rational& o) const {
  return make(static_cast<__int128>(num_) * o.den_ +
                  static_cast<__int128>(o.num_) * den_,
              static_cast<__int128>(den_) * o.den_);
}

Rational Rational::operator-(const Rational& o) const {
  return make(static_cast<__int128>(num_) * o.den_ -
                  static_cast<__int128>(o.num_) * den_,
              static_cast<__int128>(den_) * o.den_);
}

Rational Rational::operator*(const Rational& o) const {
  return make(static_cast<__int128>(num_) * o.num_,
              static_cast<__int128>(den_) * o.den_);
}

Rational Rational::operator/(const Rational& o) const {
  if (o.num_ == 0) throw DomainError("rational: division by zero");
  return make(static_cast<__int128>(num_) * o.den_,
              static_cast<__int128>(den_) * o.num_);
}

std::strong_ordering Rational::operator<=>(const Rational& o) const {
  __int128 l = static_cast<__int128>(num_) * o.den_;
  __int128 r = static_cast<__int128>(o.num_) * den_;
  if (l < r) return std::strong_ordering::less;
  if (l > r) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string Rational::str() const {
  std::string s = std::to_string(num_);
  if (den_ != 1) s += "/" + std::to_string(den_);
  return s;
}

}  // namespace polyzero

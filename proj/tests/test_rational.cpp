#include "doctest.h"
#include "polyzero/rational.hpp"

using polyzero::Rational;

TEST_CASE("rational normalization and arithmetic") {
  CHECK(Rational(6, 4) == Rational(3, 2));
  CHECK(Rational(-6, 4) == Rational(-3, 2));
  CHECK(Rational(6, -4) == Rational(-3, 2));
  CHECK(Rational(0, 7) == Rational(0));
  CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
  CHECK((Rational(1, 3) - Rational(1, 2)) == Rational(-1, 6));
  CHECK((Rational(2, 3) * Rational(9, 4)) == Rational(3, 2));
  CHECK((Rational(2, 3) / Rational(4, 3)) == Rational(1, 2));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(Rational(-1, 2) < Rational(-1, 3));
  CHECK(Rational(7, 2).str() == "7/2");
  CHECK(Rational(-4).str() == "-4");
  CHECK(Rational(1, 4).to_double() == doctest::Approx(0.25));
}

TEST_CASE("rational error cases") {
  CHECK_THROWS_AS(Rational(1, 0), polyzero::DomainError);
  CHECK_THROWS_AS(Rational(1) / Rational(0), polyzero::DomainError);
}

#include "chainnet/errors.hpp"
#include "chainnet/rational.hpp"

#include <doctest.h>

using chainnet::format_rational;
using chainnet::InputError;
using chainnet::parse_rational;
using chainnet::Rational;

TEST_SUITE("rational") {

TEST_CASE("parses integers, decimals and fractions") {
    CHECK(parse_rational("0") == Rational(0));
    CHECK(parse_rational("42") == Rational(42));
    CHECK(parse_rational("-7") == Rational(-7));
    CHECK(parse_rational("+3") == Rational(3));
    CHECK(parse_rational("4.1") == Rational(41, 10));
    CHECK(parse_rational("-2.5") == Rational(-5, 2));
    CHECK(parse_rational("0.25") == Rational(1, 4));
    CHECK(parse_rational(".5") == Rational(1, 2));
    CHECK(parse_rational("6.30") == Rational(63, 10));
    CHECK(parse_rational("1/3") == Rational(1, 3));
    CHECK(parse_rational("-9/12") == Rational(-3, 4));
    CHECK(parse_rational("10/5") == Rational(2));
}

TEST_CASE("rejects malformed numbers") {
    CHECK_THROWS_AS(parse_rational(""), InputError);
    CHECK_THROWS_AS(parse_rational("-"), InputError);
    CHECK_THROWS_AS(parse_rational("1.2.3"), InputError);
    CHECK_THROWS_AS(parse_rational("1..2"), InputError);
    CHECK_THROWS_AS(parse_rational("abc"), InputError);
    CHECK_THROWS_AS(parse_rational("1e3"), InputError);
    CHECK_THROWS_AS(parse_rational("1/2/3"), InputError);
    CHECK_THROWS_AS(parse_rational("1/-2"), InputError);
    CHECK_THROWS_AS(parse_rational("3."), InputError);
    CHECK_THROWS_AS(parse_rational(" 1"), InputError);
    CHECK_THROWS_AS(parse_rational("5/0"), InputError);
}

TEST_CASE("formats decimals when the denominator is 2^a 5^b") {
    CHECK(format_rational(Rational(0)) == "0");
    CHECK(format_rational(Rational(26)) == "26");
    CHECK(format_rational(Rational(41, 10)) == "4.1");
    CHECK(format_rational(Rational(-5, 2)) == "-2.5");
    CHECK(format_rational(Rational(1, 4)) == "0.25");
    CHECK(format_rational(Rational(1, 8)) == "0.125");
    CHECK(format_rational(Rational(1, 5)) == "0.2");
    CHECK(format_rational(Rational(653, 100)) == "6.53");
    CHECK(format_rational(Rational(-1306, 100)) == "-13.06");
    CHECK(format_rational(Rational(1, 1000)) == "0.001");
}

TEST_CASE("falls back to p/q for other denominators") {
    CHECK(format_rational(Rational(1, 3)) == "1/3");
    CHECK(format_rational(Rational(-5, 7)) == "-5/7");
    CHECK(format_rational(Rational(22, 6)) == "11/3");  // reduced form
}

TEST_CASE("round-trips through text exactly") {
    for (const char* text : {"0", "26", "4.1", "-2.5", "0.25", "6.53", "-13.06",
                             "1/3", "-5/7", "92.25", "0.001"}) {
        CAPTURE(text);
        CHECK(format_rational(parse_rational(text)) == text);
    }
}

}  // TEST_SUITE

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace chainnet {

// All money and unit quantities are exact rationals; no floating point
// enters any balance computation.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Accepts integer ("42"), decimal ("-3.77", "0.5"), and fraction ("5/4",
// "-7/3") literals. Throws InputError on anything else (including q == 0).
Rational parse_rational(std::string_view text);

// Renders the exact value: a decimal string when the reduced denominator is
// of the form 2^a * 5^b (so the expansion terminates), otherwise "p/q".
std::string format_rational(const Rational& value);

}  // namespace chainnet

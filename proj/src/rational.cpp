#include "chainnet/rational.hpp"

#include "chainnet/errors.hpp"

#include <algorithm>
#include <cctype>

namespace chainnet {

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() &&
           std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

[[noreturn]] void bad_number(std::string_view text) {
    throw InputError("not a valid number: '" + std::string(text) + "'");
}

// cpp_int's string constructor honours 0/0x radix prefixes; strip leading
// zeros so digit runs like "025" stay decimal.
BigInt from_digits(std::string_view digits) {
    const size_t first = digits.find_first_not_of('0');
    if (first == std::string_view::npos) return BigInt(0);
    return BigInt{std::string(digits.substr(first))};
}

}  // namespace

Rational parse_rational(std::string_view text) {
    std::string_view rest = text;
    bool negative = false;
    if (!rest.empty() && (rest.front() == '+' || rest.front() == '-')) {
        negative = rest.front() == '-';
        rest.remove_prefix(1);
    }
    if (rest.empty()) bad_number(text);

    Rational magnitude;
    if (auto slash = rest.find('/'); slash != std::string_view::npos) {
        std::string_view num = rest.substr(0, slash);
        std::string_view den = rest.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) bad_number(text);
        const BigInt q = from_digits(den);
        if (q == 0) throw InputError("zero denominator: '" + std::string(text) + "'");
        magnitude = Rational(from_digits(num), q);
    } else if (auto dot = rest.find('.'); dot != std::string_view::npos) {
        std::string_view whole = rest.substr(0, dot);
        std::string_view frac = rest.substr(dot + 1);
        if (!all_digits(frac) || (!whole.empty() && !all_digits(whole))) bad_number(text);
        const BigInt scale = pow(BigInt(10), static_cast<unsigned>(frac.size()));
        magnitude = Rational(from_digits(whole) * scale + from_digits(frac), scale);
    } else {
        if (!all_digits(rest)) bad_number(text);
        magnitude = Rational(from_digits(rest));
    }
    return negative ? Rational(-magnitude) : magnitude;
}

std::string format_rational(const Rational& value) {
    const BigInt num = numerator(value);
    const BigInt den = denominator(value);

    BigInt reduced = den;
    unsigned twos = 0;
    unsigned fives = 0;
    while (reduced % 2 == 0) {
        reduced /= 2;
        ++twos;
    }
    while (reduced % 5 == 0) {
        reduced /= 5;
        ++fives;
    }
    if (reduced != 1) return num.str() + "/" + den.str();

    const unsigned digits = std::max(twos, fives);
    if (digits == 0) return num.str();

    const BigInt scaled = abs(num) * pow(BigInt(10), digits) / den;
    std::string body = scaled.str();
    if (body.size() <= digits) body.insert(0, digits + 1 - body.size(), '0');

    std::string frac = body.substr(body.size() - digits);
    while (!frac.empty() && frac.back() == '0') frac.pop_back();

    std::string out = num < 0 ? "-" : "";
    out += body.substr(0, body.size() - digits);
    if (!frac.empty()) out += "." + frac;
    return out;
}

}  // namespace chainnet

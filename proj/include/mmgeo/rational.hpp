#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace mmgeo {

/// Arbitrary-precision rational used for every exact mass and distance check.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses `p/q`, an integer, or a plain decimal (`-0.125`, `3e-2`) into the
/// exact rational it denotes. Locale independent.
Rational parse_rational(std::string_view text);

/// `p/q` in lowest terms, or just `p` for integers.
std::string to_string(const Rational& value);

double to_double(const Rational& value);

/// Exact value of a binary64 number.
inline Rational exact_rational(double value) { return Rational(value); }

/// Best rational approximation with denominator at most `max_denominator`
/// (continued fractions). Returns true and sets `out` only when the
/// approximation reproduces `value` to within `tolerance`.
bool recognize_rational(double value, std::int64_t max_denominator, double tolerance, Rational& out);

/// Largest p/q <= value with q = denominator.
Rational round_down(double value, std::int64_t denominator);

}  // namespace mmgeo

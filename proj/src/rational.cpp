#include "mmgeo/rational.hpp"

#include <cctype>
#include <cmath>

#include "mmgeo/error.hpp"

namespace mmgeo {

namespace {

BigInt parse_integer(std::string_view digits, std::string_view whole) {
  if (digits.empty()) throw Error(ErrorCode::ParseError, "empty integer in '" + std::string(whole) + "'");
  BigInt out = 0;
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw Error(ErrorCode::ParseError, "bad digit in '" + std::string(whole) + "'");
    out = out * 10 + (c - '0');
  }
  return out;
}

BigInt pow10(unsigned e) {
  BigInt out = 1;
  for (unsigned i = 0; i < e; ++i) out *= 10;
  return out;
}

Rational parse_decimal(std::string_view text, std::string_view whole) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp = text.substr(e + 1);
    bool exp_negative = false;
    if (!exp.empty() && (exp.front() == '-' || exp.front() == '+')) {
      exp_negative = exp.front() == '-';
      exp.remove_prefix(1);
    }
    BigInt mag = parse_integer(exp, whole);
    if (mag > 4000) throw Error(ErrorCode::ParseError, "exponent out of range in '" + std::string(whole) + "'");
    exponent = mag.convert_to<long>();
    if (exp_negative) exponent = -exponent;
    text = text.substr(0, e);
  }
  std::string_view int_part = text;
  std::string_view frac_part;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    int_part = text.substr(0, dot);
    frac_part = text.substr(dot + 1);
  }
  if (int_part.empty() && frac_part.empty())
    throw Error(ErrorCode::ParseError, "no digits in '" + std::string(whole) + "'");
  BigInt mantissa = int_part.empty() ? BigInt(0) : parse_integer(int_part, whole);
  if (!frac_part.empty()) mantissa = mantissa * pow10(frac_part.size()) + parse_integer(frac_part, whole);
  exponent -= static_cast<long>(frac_part.size());
  Rational out = exponent >= 0 ? Rational(mantissa * pow10(static_cast<unsigned>(exponent)))
                               : Rational(mantissa, pow10(static_cast<unsigned>(-exponent)));
  return negative ? Rational(-out) : out;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(text.substr(0, slash), text);
    Rational den = parse_decimal(text.substr(slash + 1), text);
    if (den == 0) throw Error(ErrorCode::ParseError, "zero denominator in '" + std::string(text) + "'");
    return num / den;
  }
  return parse_decimal(text, text);
}

std::string to_string(const Rational& value) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

bool recognize_rational(double value, std::int64_t max_denominator, double tolerance, Rational& out) {
  if (!std::isfinite(value)) return false;
  // Convergents h/k of the continued fraction of value.
  BigInt h_prev = 1, h = static_cast<std::int64_t>(std::floor(value));
  BigInt k_prev = 0, k = 1;
  double x = value - std::floor(value);
  for (int iter = 0; iter < 64; ++iter) {
    const Rational candidate(h, k);
    if (std::abs(to_double(candidate) - value) <= tolerance) {
      out = candidate;
      return true;
    }
    if (x == 0.0) break;
    x = 1.0 / x;
    const double a = std::floor(x);
    x -= a;
    const BigInt ai = static_cast<std::int64_t>(a);
    BigInt h_next = ai * h + h_prev;
    BigInt k_next = ai * k + k_prev;
    if (k_next > max_denominator) break;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
  }
  return false;
}

Rational round_down(double value, std::int64_t denominator) {
  const Rational exact = exact_rational(value) * denominator;
  BigInt floor_num = boost::multiprecision::numerator(exact) / boost::multiprecision::denominator(exact);
  if (Rational(floor_num) > exact) floor_num -= 1;
  return Rational(floor_num, denominator);
}

}  // namespace mmgeo

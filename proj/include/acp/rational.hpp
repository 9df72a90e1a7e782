#pragma once

// Exact potentials. Colour bucketing compares potentials for equality, which
// must be an equivalence relation, so potentials never pass through floating
// point until inference.

#include <gmpxx.h>

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>

#include "acp/error.hpp"

namespace acp {

using Rational = mpq_class;

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

inline mpz_class pow10(unsigned long e) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), 10, e);
  return r;
}

}  // namespace detail

/// Parses "12", "0.125", "-3.5e-2" or "7/3" into an exact rational.
inline Rational parse_rational(std::string_view text) {
  auto bad = [&] { fail(ErrorKind::parse, "not a decimal number: '" + std::string(text) + "'"); };
  if (text.empty()) bad();

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::string_view num = text.substr(0, slash), den = text.substr(slash + 1);
    bool signed_num = !num.empty() && (num[0] == '-' || num[0] == '+');
    std::string_view num_digits = signed_num ? num.substr(1) : num;
    if (!detail::all_digits(num_digits) || !detail::all_digits(den)) bad();
    mpz_class n(std::string(num_digits), 10), d(std::string(den), 10);
    if (d == 0) bad();
    if (num[0] == '-') n = -n;
    Rational r(n, d);
    r.canonicalize();
    return r;
  }

  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') {
    negative = text[pos] == '-';
    ++pos;
  }
  std::string_view rest = text.substr(pos);
  std::string_view mantissa = rest, exponent;
  if (auto e = rest.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = rest.substr(0, e);
    exponent = rest.substr(e + 1);
    if (exponent.empty()) bad();
  }
  std::string_view int_part = mantissa, frac_part;
  if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
    int_part = mantissa.substr(0, dot);
    frac_part = mantissa.substr(dot + 1);
    if (!frac_part.empty() && !detail::all_digits(frac_part)) bad();
  }
  if (int_part.empty() && frac_part.empty()) bad();
  if (!int_part.empty() && !detail::all_digits(int_part)) bad();

  std::string digits = std::string(int_part) + std::string(frac_part);
  mpz_class numerator(digits.empty() ? std::string("0") : digits, 10);
  long scale = -static_cast<long>(frac_part.size());
  if (!exponent.empty()) {
    bool exp_negative = exponent[0] == '-';
    std::string_view exp_digits =
        (exponent[0] == '-' || exponent[0] == '+') ? exponent.substr(1) : exponent;
    if (!detail::all_digits(exp_digits) || exp_digits.size() > 6) bad();
    long e = std::stol(std::string(exp_digits));
    scale += exp_negative ? -e : e;
  }
  Rational r;
  if (scale >= 0) {
    r = Rational(numerator * detail::pow10(static_cast<unsigned long>(scale)));
  } else {
    r = Rational(numerator, detail::pow10(static_cast<unsigned long>(-scale)));
    r.canonicalize();
  }
  if (negative) r = -r;
  return r;
}

/// Shortest exact decimal when the denominator is 2^a 5^b, "p/q" otherwise.
inline std::string format_rational(const Rational& value) {
  mpz_class den = value.get_den();
  unsigned long twos = 0, fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
    den /= 2;
    ++twos;
  }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return value.get_num().get_str() + "/" + value.get_den().get_str();

  unsigned long places = std::max(twos, fives);
  mpz_class scaled = value.get_num() * detail::pow10(places) / value.get_den();
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string digits = scaled.get_str();
  if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
  std::string out = digits.substr(0, digits.size() - places);
  if (places > 0) out += "." + digits.substr(digits.size() - places);
  return negative ? "-" + out : out;
}

inline double to_double(const Rational& value) { return value.get_d(); }

}  // namespace acp

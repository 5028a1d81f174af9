#pragma once

#include <gmpxx.h>

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "huapadic/rng.hpp"

namespace huapadic {

using Integer = mpz_class;
using Rational = mpq_class;

inline Integer ipow(long base, unsigned long exp) {
  Integer r;
  mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base), exp);
  return r;
}

/// base^exp for any integer exponent (negative exponents give 1/base^|exp|).
inline Rational rpow(const Rational& base, long exp) {
  Rational num, den;
  mpz_pow_ui(num.get_num_mpz_t(), base.get_num_mpz_t(), static_cast<unsigned long>(exp < 0 ? -exp : exp));
  mpz_pow_ui(num.get_den_mpz_t(), base.get_den_mpz_t(), static_cast<unsigned long>(exp < 0 ? -exp : exp));
  if (exp < 0) {
    if (num.get_num() == 0) throw std::domain_error("rpow: zero to a negative power");
    mpz_swap(num.get_num_mpz_t(), num.get_den_mpz_t());
  }
  num.canonicalize();
  return num;
}

/// p^exp as an exact rational.
inline Rational ppow(long p, long exp) {
  Rational r;
  if (exp >= 0) {
    r = Rational(ipow(p, static_cast<unsigned long>(exp)));
  } else {
    r = Rational(Integer(1), ipow(p, static_cast<unsigned long>(-exp)));
  }
  return r;
}

/// num / den in canonical form; mpq_class(num, den) alone does not reduce.
inline Rational fraction(const Integer& num, const Integer& den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

/// "num/den" with the denominator always present.
inline std::string to_fraction_string(const Rational& r) {
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

/// Fixed-point decimal with `digits` fractional digits, rounded toward zero.
inline std::string to_decimal_string(const Rational& r, int digits = 12) {
  const Integer scale = ipow(10, static_cast<unsigned long>(digits));
  Integer scaled = (abs(r.get_num()) * scale) / r.get_den();
  std::string s = scaled.get_str();
  if (static_cast<int>(s.size()) <= digits) s.insert(0, static_cast<std::size_t>(digits + 1) - s.size(), '0');
  s.insert(s.size() - static_cast<std::size_t>(digits), ".");
  if (r < 0) s.insert(0, "-");
  return s;
}

/// Fixed-point decimal rounded down (`up = false`) or up, for printing
/// bracket endpoints outward.
inline std::string to_decimal_rounded(const Rational& r, int digits, bool up) {
  const Integer scale = ipow(10, static_cast<unsigned long>(digits));
  Integer num = r.get_num() * scale;
  Integer q;
  if (up) {
    mpz_cdiv_q(q.get_mpz_t(), num.get_mpz_t(), r.get_den().get_mpz_t());
  } else {
    mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), r.get_den().get_mpz_t());
  }
  return to_decimal_string(fraction(q, scale), digits);
}

/// Parses "a", "a/b" or "-a/b" exactly. Anything with a decimal point or an
/// exponent is refused so that parameters stay exact.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty rational");
  if (s.find_first_of(".eE") != std::string::npos) {
    throw std::invalid_argument("'" + s + "' is not an exact fraction; write it as num/den (for example 1/2)");
  }
  const auto slash = s.find('/');
  auto is_int = [](const std::string& x) {
    std::size_t i = (!x.empty() && (x[0] == '-' || x[0] == '+')) ? 1 : 0;
    if (i >= x.size()) return false;
    for (; i < x.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(x[i]))) return false;
    }
    return true;
  };
  auto strip_plus = [](std::string x) { return (!x.empty() && x[0] == '+') ? x.substr(1) : x; };
  if (slash == std::string::npos) {
    if (!is_int(s)) throw std::invalid_argument("malformed rational '" + s + "'");
    return Rational(Integer(strip_plus(s)));
  }
  const std::string num = s.substr(0, slash);
  const std::string den = s.substr(slash + 1);
  if (!is_int(num) || !is_int(den) || den[0] == '-') {
    throw std::invalid_argument("malformed rational '" + s + "'");
  }
  Integer d(strip_plus(den));
  if (d == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
  Rational r(Integer(strip_plus(num)), d);
  r.canonicalize();
  return r;
}

/// A uniform variable on [0, 1) whose binary digits are revealed on demand.
///
/// After drawing b bits the variable is known to lie in [u/2^b, (u+1)/2^b).
/// Comparisons against exact rationals reveal more bits until they are
/// decided, so inverse-CDF sampling against exact cumulative sums never
/// misclassifies.
class LazyUniform {
 public:
  explicit LazyUniform(RngStream& rng) : rng_(rng) { refine(); }

  void refine() {
    u_ <<= 64;
    u_ += Integer(static_cast<unsigned long>(rng_.next()));
    bits_ += 64;
  }

  [[nodiscard]] unsigned long bits() const { return bits_; }

  /// -1 if certainly U < c, +1 if certainly U >= c, 0 if undecided at the
  /// current resolution.
  [[nodiscard]] int compare(const Rational& c) const {
    // U < c  <=>  (u+1) * den <= num * 2^b     (certain)
    // U >= c <=>  u * den >= num * 2^b         (certain)
    Integer scaled = c.get_num();
    scaled <<= bits_;
    Integer lo = u_ * c.get_den();
    if (lo >= scaled) return 1;
    Integer hi = lo + c.get_den();
    if (hi <= scaled) return -1;
    return 0;
  }

  /// Decides U < c exactly, refining as needed.
  bool less_than(const Rational& c) {
    for (;;) {
      const int cmp = compare(c);
      if (cmp != 0) return cmp < 0;
      refine();
    }
  }

  /// Interval currently known to contain U.
  [[nodiscard]] Rational lower() const { return dyadic(u_); }
  [[nodiscard]] Rational upper() const { return dyadic(u_ + 1); }

 private:
  [[nodiscard]] Rational dyadic(const Integer& n) const {
    Integer den = 1;
    den <<= bits_;
    Rational r(n, den);
    r.canonicalize();
    return r;
  }

  RngStream& rng_;
  Integer u_ = 0;
  unsigned long bits_ = 0;
};

}  // namespace huapadic

#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "huapadic/rational.hpp"

namespace huapadic {

/// An exact rational bracket [lower, upper] around a real number.
struct CertifiedValue {
  Rational lower;
  Rational upper;
  /// Number of exact factors or terms used before the tail bound kicked in.
  long terms = 0;

  static CertifiedValue exact(const Rational& v) { return {v, v, 0}; }

  [[nodiscard]] Rational width() const { return upper - lower; }
  [[nodiscard]] Rational midpoint() const { return (lower + upper) / 2; }
  [[nodiscard]] bool contains(const Rational& v) const { return lower <= v && v <= upper; }
  [[nodiscard]] bool overlaps(const CertifiedValue& o) const { return lower <= o.upper && o.lower <= upper; }
  [[nodiscard]] bool within(const CertifiedValue& o) const { return o.lower <= lower && upper <= o.upper; }
  [[nodiscard]] double approx() const { return midpoint().get_d(); }
};

inline CertifiedValue operator+(const CertifiedValue& a, const CertifiedValue& b) {
  return {a.lower + b.lower, a.upper + b.upper, std::max(a.terms, b.terms)};
}

/// Product of brackets of non-negative quantities.
inline CertifiedValue operator*(const CertifiedValue& a, const CertifiedValue& b) {
  if (a.lower < 0 || b.lower < 0) throw std::domain_error("bracket product requires non-negative brackets");
  return {a.lower * b.lower, a.upper * b.upper, std::max(a.terms, b.terms)};
}

/// Scaling by a non-negative exact factor.
inline CertifiedValue operator*(const Rational& c, const CertifiedValue& v) {
  if (c < 0) throw std::domain_error("bracket scaling requires a non-negative factor");
  return {c * v.lower, c * v.upper, v.terms};
}

/// (a; q)_n = prod_{j=0}^{n-1} (1 - a q^j), exact.
inline Rational pochhammer(const Rational& a, const Rational& q, long n) {
  if (n < 0) throw std::invalid_argument("pochhammer: negative length");
  Rational result = 1;
  Rational term = a;
  for (long j = 0; j < n; ++j) {
    result *= 1 - term;
    term *= q;
  }
  return result;
}

namespace detail {

/// Certified bracket for prod_{i >= start, keep(i)} (1 - c q^i) with 0 <= c q^start < 1.
///
/// Factors are multiplied exactly up to an index K with c q^K < 1/2 and then
/// the tail satisfies |log prod_{i>=K}(1 - c q^i)| <= 2 c q^K / (1 - q) =: T,
/// so the value lies in [P_K (1 - T), P_K].
inline CertifiedValue certified_product(const Rational& c, const Rational& q, long start,
                                        const std::function<bool(long)>& keep, const Rational& eps) {
  if (eps <= 0) throw std::invalid_argument("certified product: eps must be positive");
  if (q <= 0 || q >= 1) throw std::domain_error("certified product: q must lie in (0, 1)");
  if (c < 0) throw std::domain_error("certified product: negative coefficient");
  if (c == 0) return CertifiedValue::exact(1);
  Rational term = c * rpow(q, start);
  if (term >= 1) throw std::domain_error("certified product: leading factor is not positive");
  const Rational half(1, 2);
  const Rational one_minus_q = 1 - q;
  Rational partial = 1;
  long i = start;
  for (;;) {
    if (term < half) {
      const Rational tail = 2 * term / one_minus_q;
      if (partial * tail <= eps) {
        Rational lower = tail < 1 ? partial * (1 - tail) : Rational(0);
        return {lower, partial, i - start};
      }
    }
    if (keep(i)) partial *= 1 - term;
    term *= q;
    ++i;
  }
}

}  // namespace detail

/// Bracket of width <= eps around (a; q)_inf; `terms` reports the truncation point.
inline CertifiedValue pochhammer_inf(const Rational& a, const Rational& q, const Rational& eps) {
  if (a >= 1) throw std::domain_error("pochhammer_inf: need a < 1");
  if (a < 0) throw std::domain_error("pochhammer_inf: need a >= 0");
  return detail::certified_product(a, q, 0, [](long) { return true; }, eps);
}

/// Bracket around prod_{i >= start, keep(i)} (1 - q^i).
inline CertifiedValue power_product_inf(const Rational& q, long start, const std::function<bool(long)>& keep,
                                        const Rational& eps) {
  if (start < 1) throw std::domain_error("power_product_inf: start must be at least 1");
  return detail::certified_product(Rational(1), q, start, keep, eps);
}

}  // namespace huapadic

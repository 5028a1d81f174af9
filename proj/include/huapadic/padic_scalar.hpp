#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "huapadic/rational.hpp"
#include "huapadic/rng.hpp"

namespace huapadic {

/// Raised when a computation would need digits beyond the working window.
class PrecisionExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Working precision: `digits` p-adic digits, of which `guard` are held back
/// when certifying singular numbers.
struct PrecisionBudget {
  long digits = 24;
  long guard = 8;

  void validate() const {
    if (guard < 0 || digits <= guard) throw std::invalid_argument("precision budget needs digits > guard >= 0");
  }

  friend bool operator==(const PrecisionBudget&, const PrecisionBudget&) = default;
};

inline bool is_prime(long p) {
  if (p < 2) return false;
  for (long d = 2; d * d <= p; ++d) {
    if (p % d == 0) return false;
  }
  return true;
}

inline void require_prime(long p) {
  if (p > (1L << 31) || !is_prime(p)) throw std::invalid_argument("p must be a prime not exceeding 2^31");
}

/// Number of times p divides n (n != 0).
inline long count_p_factors(Integer& n, long p) {
  long v = 0;
  const auto up = static_cast<unsigned long>(p);
  while (mpz_divisible_ui_p(n.get_mpz_t(), up) != 0) {
    mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), up);
    ++v;
  }
  return v;
}

/// Result of asking for a valuation at finite precision.
struct Valuation {
  enum class Kind { finite, below_precision, infinite };
  Kind kind = Kind::infinite;
  /// The valuation when finite; a lower bound when below precision.
  long value = 0;

  static Valuation finite(long v) { return {Kind::finite, v}; }
  static Valuation below(long bound) { return {Kind::below_precision, bound}; }
  static Valuation infinite() { return {Kind::infinite, 0}; }

  [[nodiscard]] bool is_finite() const { return kind == Kind::finite; }
  friend bool operator==(const Valuation&, const Valuation&) = default;
};

/// An element of Q_p known modulo a power of p.
///
/// A nonzero certified value is p^{-shift} * residue with residue a unit
/// modulo p^precision, so the value is known modulo p^{precision - shift}.
/// A zero to working precision has residue 0, precision 0 and is known
/// modulo p^{-shift}. Exact zero only comes from an explicit literal.
class PadicScalar {
 public:
  static PadicScalar exact_zero(long p) {
    require_prime(p);
    PadicScalar x(p);
    x.exact_zero_ = true;
    return x;
  }

  /// Zero known modulo p^{absolute_precision}.
  static PadicScalar zero_to_precision(long p, long absolute_precision) {
    require_prime(p);
    PadicScalar x(p);
    x.shift_ = -absolute_precision;
    return x;
  }

  /// p^{-shift} * residue, with the residue known modulo p^{digits}.
  static PadicScalar from_residue(long p, Integer residue, long digits, long shift = 0) {
    require_prime(p);
    if (digits < 0) throw std::invalid_argument("negative digit count");
    PadicScalar x(p);
    x.shift_ = shift;
    x.precision_ = digits;
    x.residue_ = std::move(residue);
    x.normalize();
    return x;
  }

  /// The exact rational r (p-integral denominators handled modularly),
  /// rounded to `digits` significant p-adic digits.
  static PadicScalar from_rational(long p, const Rational& r, long digits) {
    require_prime(p);
    if (digits < 1) throw std::invalid_argument("need at least one digit");
    if (r == 0) return exact_zero(p);
    Integer num = r.get_num();
    Integer den = r.get_den();
    const long v = count_p_factors(num, p) - count_p_factors(den, p);
    const Integer modulus = ipow(p, static_cast<unsigned long>(digits));
    Integer inv;
    mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), modulus.get_mpz_t());
    Integer unit = num * inv;
    mpz_mod(unit.get_mpz_t(), unit.get_mpz_t(), modulus.get_mpz_t());
    return from_residue(p, unit, digits, -v);
  }

  static PadicScalar from_integer(long p, const Integer& n, long digits) { return from_rational(p, Rational(n), digits); }

  [[nodiscard]] long prime() const { return p_; }
  [[nodiscard]] long shift() const { return shift_; }
  [[nodiscard]] long precision() const { return precision_; }
  [[nodiscard]] const Integer& residue() const { return residue_; }
  [[nodiscard]] bool is_exact_zero() const { return exact_zero_; }
  [[nodiscard]] bool is_zero() const { return exact_zero_ || residue_ == 0; }

  /// Exponent A such that the value is known modulo p^A.
  [[nodiscard]] long absolute_precision() const {
    if (exact_zero_) return std::numeric_limits<long>::max();
    return precision_ - shift_;
  }

  [[nodiscard]] Valuation valuation() const {
    if (exact_zero_) return Valuation::infinite();
    if (residue_ == 0) return Valuation::below(absolute_precision());
    return Valuation::finite(-shift_);
  }

  /// Exact rational representative p^{-shift} * residue.
  [[nodiscard]] Rational representative() const {
    if (is_zero()) return 0;
    return ppow(p_, -shift_) * Rational(residue_);
  }

  /// "a*p^v" with a the unit residue; "0" for any zero.
  [[nodiscard]] std::string to_string() const {
    if (is_zero()) return "0";
    return residue_.get_str() + "*" + std::to_string(p_) + "^" + std::to_string(-shift_);
  }

  friend PadicScalar operator-(const PadicScalar& x) {
    if (x.is_zero()) return x;
    PadicScalar r = x;
    const Integer modulus = ipow(x.p_, static_cast<unsigned long>(x.precision_));
    r.residue_ = modulus - x.residue_;
    return r;
  }

  friend PadicScalar operator+(const PadicScalar& x, const PadicScalar& y) {
    check_same_prime(x, y);
    if (x.exact_zero_) return y;
    if (y.exact_zero_) return x;
    const long p = x.p_;
    const long abs_prec = std::min(x.absolute_precision(), y.absolute_precision());
    // Valuation lower bounds; for an inexact zero this is its absolute precision.
    const long vx = x.residue_ == 0 ? x.absolute_precision() : -x.shift_;
    const long vy = y.residue_ == 0 ? y.absolute_precision() : -y.shift_;
    const long vmin = std::min(vx, vy);
    if (vmin >= abs_prec) return zero_to_precision(p, abs_prec);
    const long digits = abs_prec - vmin;
    const Integer modulus = ipow(p, static_cast<unsigned long>(digits));
    Integer sum = 0;
    if (x.residue_ != 0 && vx - vmin < digits) sum += ipow(p, static_cast<unsigned long>(vx - vmin)) * x.residue_;
    if (y.residue_ != 0 && vy - vmin < digits) sum += ipow(p, static_cast<unsigned long>(vy - vmin)) * y.residue_;
    mpz_mod(sum.get_mpz_t(), sum.get_mpz_t(), modulus.get_mpz_t());
    return from_residue(p, std::move(sum), digits, -vmin);
  }

  friend PadicScalar operator-(const PadicScalar& x, const PadicScalar& y) { return x + (-y); }

  friend PadicScalar operator*(const PadicScalar& x, const PadicScalar& y) {
    check_same_prime(x, y);
    if (x.exact_zero_ || y.exact_zero_) return exact_zero(x.p_);
    const long p = x.p_;
    const bool xz = x.residue_ == 0;
    const bool yz = y.residue_ == 0;
    if (xz && yz) return zero_to_precision(p, x.absolute_precision() + y.absolute_precision());
    if (xz) return zero_to_precision(p, x.absolute_precision() - y.shift_);
    if (yz) return zero_to_precision(p, y.absolute_precision() - x.shift_);
    const long digits = std::min(x.precision_, y.precision_);
    if (digits <= 0) throw PrecisionExhausted("product has an empty precision window");
    const Integer modulus = ipow(p, static_cast<unsigned long>(digits));
    Integer prod = x.residue_ * y.residue_;
    mpz_mod(prod.get_mpz_t(), prod.get_mpz_t(), modulus.get_mpz_t());
    return from_residue(p, std::move(prod), digits, x.shift_ + y.shift_);
  }

  /// Same value to the precision both sides carry.
  friend bool operator==(const PadicScalar& x, const PadicScalar& y) {
    return x.p_ == y.p_ && x.exact_zero_ == y.exact_zero_ && x.shift_ == y.shift_ && x.precision_ == y.precision_ &&
           x.residue_ == y.residue_;
  }

 private:
  explicit PadicScalar(long p) : p_(p) {}

  static void check_same_prime(const PadicScalar& x, const PadicScalar& y) {
    if (x.p_ != y.p_) throw std::invalid_argument("p-adic operands over different primes");
  }

  // Moves powers of p from the residue into the shift, keeping the
  // absolute precision fixed.
  void normalize() {
    const Integer modulus = ipow(p_, static_cast<unsigned long>(precision_));
    mpz_mod(residue_.get_mpz_t(), residue_.get_mpz_t(), modulus.get_mpz_t());
    if (residue_ == 0) {
      shift_ -= precision_;
      precision_ = 0;
      return;
    }
    const long v = count_p_factors(residue_, p_);
    shift_ -= v;
    precision_ -= v;
  }

  long p_;
  long shift_ = 0;
  long precision_ = 0;
  Integer residue_ = 0;
  bool exact_zero_ = false;
};

/// Uniform integer in [0, p^digits); every base-p digit is uniform and independent.
inline Integer uniform_residue(long p, long digits, RngStream& rng) {
  // Largest chunk c with p^c < 2^63, drawn as one bounded integer.
  long chunk = 0;
  unsigned long long chunk_mod = 1;
  while (chunk_mod <= (1ULL << 62) / static_cast<unsigned long long>(p)) {
    chunk_mod *= static_cast<unsigned long long>(p);
    ++chunk;
  }
  if (digits <= chunk) {
    unsigned long long m = 1;
    for (long i = 0; i < digits; ++i) m *= static_cast<unsigned long long>(p);
    return Integer(static_cast<unsigned long>(rng.uniform_below(m)));
  }
  Integer result = 0;
  long remaining = digits;
  Integer scale = 1;
  while (remaining > 0) {
    const long take = std::min(remaining, chunk);
    unsigned long long m = 1;
    for (long i = 0; i < take; ++i) m *= static_cast<unsigned long long>(p);
    result += scale * Integer(static_cast<unsigned long>(rng.uniform_below(m)));
    scale *= Integer(static_cast<unsigned long>(m));
    remaining -= take;
  }
  return result;
}

/// Haar measure on Z_p truncated to `digits` digits.
inline PadicScalar sample_haar_zp(long p, long digits, RngStream& rng) {
  if (digits < 1) throw std::invalid_argument("sample_haar_zp needs at least one digit");
  return PadicScalar::from_residue(p, uniform_residue(p, digits, rng), digits, 0);
}

}  // namespace huapadic

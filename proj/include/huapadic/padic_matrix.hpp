#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "huapadic/padic_scalar.hpp"
#include "huapadic/qseries.hpp"

namespace huapadic {

/// Singular numbers k_1 >= ... >= k_N of a matrix over Q_p.
///
/// Certified values come first; the remaining `markers` entries are only
/// known to be <= `floor`.
struct SingularTuple {
  std::vector<long> parts;
  std::size_t markers = 0;
  long floor = 0;

  static SingularTuple exact(std::vector<long> k) {
    std::sort(k.begin(), k.end(), std::greater<>());
    return {std::move(k), 0, 0};
  }

  [[nodiscard]] std::size_t size() const { return parts.size() + markers; }
  [[nodiscard]] bool complete() const { return markers == 0; }

  /// Canonical label, e.g. "(1,0,-3)" or "(2,<=-16)".
  [[nodiscard]] std::string label() const {
    std::string s = "(";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i != 0) s += ",";
      s += std::to_string(parts[i]);
    }
    for (std::size_t i = 0; i < markers; ++i) {
      if (!parts.empty() || i != 0) s += ",";
      s += "<=" + std::to_string(floor);
    }
    return s + ")";
  }

  friend bool operator==(const SingularTuple& a, const SingularTuple& b) {
    if (a.parts != b.parts || a.markers != b.markers) return false;
    return a.markers == 0 || a.floor == b.floor;
  }
};

namespace detail {

/// Z/p^E with the modulus below 2^63.
struct SmallResidueRing {
  using value_type = std::uint64_t;
  std::uint64_t p;
  long digits;
  std::uint64_t modulus;

  SmallResidueRing(long prime, long e) : p(static_cast<std::uint64_t>(prime)), digits(e), modulus(1) {
    for (long i = 0; i < e; ++i) modulus *= p;
  }

  static bool fits(long prime, long e) {
    unsigned __int128 m = 1;
    for (long i = 0; i < e; ++i) {
      m *= static_cast<unsigned __int128>(prime);
      if (m >= (static_cast<unsigned __int128>(1) << 62)) return false;
    }
    return true;
  }

  [[nodiscard]] value_type from(const Integer& z) const { return static_cast<value_type>(z.get_ui()); }
  [[nodiscard]] Integer to_integer(value_type a) const { return Integer(static_cast<unsigned long>(a)); }
  [[nodiscard]] bool is_zero(value_type a) const { return a == 0; }

  [[nodiscard]] value_type mul(value_type a, value_type b) const {
    return static_cast<value_type>(static_cast<unsigned __int128>(a) * b % modulus);
  }
  [[nodiscard]] value_type sub(value_type a, value_type b) const { return a >= b ? a - b : a + (modulus - b); }
  [[nodiscard]] value_type add(value_type a, value_type b) const {
    const value_type s = a + b;
    return s >= modulus ? s - modulus : s;
  }

  /// Valuation of a nonzero residue; `digits` for zero.
  [[nodiscard]] long valuation(value_type a) const {
    if (a == 0) return digits;
    if (p == 2) return __builtin_ctzll(a);
    long v = 0;
    while (a % p == 0) {
      a /= p;
      ++v;
    }
    return v;
  }

  [[nodiscard]] value_type strip(value_type a, long v) const {
    for (long i = 0; i < v; ++i) a /= p;
    return a;
  }

  [[nodiscard]] value_type inverse(value_type u) const {
    // Extended Euclid on (u, modulus); u is a unit.
    __int128 t = 0, new_t = 1;
    __int128 r = static_cast<__int128>(modulus), new_r = static_cast<__int128>(u % modulus);
    while (new_r != 0) {
      const __int128 q = r / new_r;
      const __int128 tmp_t = t - q * new_t;
      t = new_t;
      new_t = tmp_t;
      const __int128 tmp_r = r - q * new_r;
      r = new_r;
      new_r = tmp_r;
    }
    if (t < 0) t += static_cast<__int128>(modulus);
    return static_cast<value_type>(t);
  }
};

/// Z/p^E with arbitrary-precision residues.
struct BigResidueRing {
  using value_type = Integer;
  long p;
  long digits;
  Integer modulus;

  BigResidueRing(long prime, long e) : p(prime), digits(e), modulus(ipow(prime, static_cast<unsigned long>(e))) {}

  [[nodiscard]] value_type from(const Integer& z) const { return z; }
  [[nodiscard]] Integer to_integer(const value_type& a) const { return a; }
  [[nodiscard]] bool is_zero(const value_type& a) const { return a == 0; }

  [[nodiscard]] value_type mul(const value_type& a, const value_type& b) const {
    Integer r = a * b;
    mpz_mod(r.get_mpz_t(), r.get_mpz_t(), modulus.get_mpz_t());
    return r;
  }
  [[nodiscard]] value_type sub(const value_type& a, const value_type& b) const {
    Integer r = a - b;
    mpz_mod(r.get_mpz_t(), r.get_mpz_t(), modulus.get_mpz_t());
    return r;
  }
  [[nodiscard]] value_type add(const value_type& a, const value_type& b) const {
    Integer r = a + b;
    mpz_mod(r.get_mpz_t(), r.get_mpz_t(), modulus.get_mpz_t());
    return r;
  }
  [[nodiscard]] long valuation(value_type a) const {
    if (a == 0) return digits;
    return count_p_factors(a, p);
  }
  [[nodiscard]] value_type strip(const value_type& a, long v) const {
    Integer r = a;
    for (long i = 0; i < v; ++i) mpz_divexact_ui(r.get_mpz_t(), r.get_mpz_t(), static_cast<unsigned long>(p));
    return r;
  }
  [[nodiscard]] value_type inverse(const value_type& u) const {
    Integer r;
    mpz_invert(r.get_mpz_t(), u.get_mpz_t(), modulus.get_mpz_t());
    return r;
  }
};

/// Smith form of an n x n matrix over Z/p^E by minimum-valuation pivoting.
///
/// Returns the divisor valuations in increasing order (E stands for a
/// divisor that vanishes modulo p^E). `a` is row-major and is destroyed.
/// Every valuation below E is exact: reduction mod p^E commutes with the
/// Smith form over Z_p.
template <class Ring>
std::vector<long> smith_valuations(const Ring& ring, std::vector<typename Ring::value_type>& a, std::size_t n) {
  std::vector<long> vals;
  vals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    long best = ring.digits;
    std::size_t br = i, bc = i;
    for (std::size_t r = i; r < n && best > 0; ++r) {
      for (std::size_t c = i; c < n; ++c) {
        const auto& x = a[r * n + c];
        if (ring.is_zero(x)) continue;
        const long v = ring.valuation(x);
        if (v < best) {
          best = v;
          br = r;
          bc = c;
          if (v == 0) break;
        }
      }
    }
    if (best >= ring.digits) {
      vals.resize(n, ring.digits);
      return vals;
    }
    if (br != i) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[i * n + c], a[br * n + c]);
    }
    if (bc != i) {
      for (std::size_t r = 0; r < n; ++r) std::swap(a[r * n + i], a[r * n + bc]);
    }
    const auto unit_inv = ring.inverse(ring.strip(a[i * n + i], best));
    for (std::size_t r = i + 1; r < n; ++r) {
      auto& lead = a[r * n + i];
      if (ring.is_zero(lead)) continue;
      const auto f = ring.mul(ring.strip(lead, best), unit_inv);
      for (std::size_t c = i + 1; c < n; ++c) a[r * n + c] = ring.sub(a[r * n + c], ring.mul(f, a[i * n + c]));
      lead = typename Ring::value_type(0);
    }
    vals.push_back(best);
  }
  return vals;
}

/// Rank of an n x n matrix modulo p (entries reduced first).
inline std::size_t rank_mod_p(std::vector<std::uint64_t> a, std::size_t n, std::uint64_t p) {
  const SmallResidueRing f(static_cast<long>(p), 1);
  for (auto& x : a) x %= p;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < n && rank < n; ++c) {
    std::size_t piv = rank;
    while (piv < n && a[piv * n + c] == 0) ++piv;
    if (piv == n) continue;
    for (std::size_t k = 0; k < n; ++k) std::swap(a[rank * n + k], a[piv * n + k]);
    const auto inv = f.inverse(a[rank * n + c]);
    for (std::size_t r = rank + 1; r < n; ++r) {
      if (a[r * n + c] == 0) continue;
      const auto m = f.mul(a[r * n + c], inv);
      for (std::size_t k = c; k < n; ++k) a[r * n + k] = f.sub(a[r * n + k], f.mul(m, a[rank * n + k]));
    }
    ++rank;
  }
  return rank;
}

}  // namespace detail

/// An N x N matrix over Q_p stored as p^{-shift} * R with R an integer
/// matrix known modulo p^digits (row-major).
class PadicMatrix {
 public:
  PadicMatrix(long p, std::size_t n, PrecisionBudget budget, long shift, std::vector<Integer> residues)
      : p_(p), n_(n), budget_(budget), shift_(shift), residues_(std::move(residues)) {
    require_prime(p);
    budget_.validate();
    if (residues_.size() != n * n) throw std::invalid_argument("residue count does not match matrix size");
    const Integer modulus = ipow(p, static_cast<unsigned long>(budget_.digits));
    for (auto& r : residues_) mpz_mod(r.get_mpz_t(), r.get_mpz_t(), modulus.get_mpz_t());
  }

  static PadicMatrix zero(long p, std::size_t n, PrecisionBudget budget) {
    return {p, n, budget, 0, std::vector<Integer>(n * n, 0)};
  }

  static PadicMatrix identity(long p, std::size_t n, PrecisionBudget budget) {
    std::vector<Integer> r(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) r[i * n + i] = 1;
    return {p, n, budget, 0, std::move(r)};
  }

  /// Exact rationals (denominators may contain p) rounded into the window.
  static PadicMatrix from_rationals(long p, std::size_t n, const std::vector<Rational>& entries,
                                    PrecisionBudget budget) {
    if (entries.size() != n * n) throw std::invalid_argument("entry count does not match matrix size");
    require_prime(p);
    long shift = 0;
    bool any = false;
    for (const auto& x : entries) {
      if (x == 0) continue;
      Integer num = x.get_num(), den = x.get_den();
      const long s = count_p_factors(den, p) - count_p_factors(num, p);
      shift = any ? std::max(shift, s) : s;
      any = true;
    }
    const Integer modulus = ipow(p, static_cast<unsigned long>(budget.digits));
    std::vector<Integer> r;
    r.reserve(n * n);
    for (const auto& x : entries) {
      // p^shift * x has a denominator prime to p.
      Rational y = x * ppow(p, shift);
      Integer inv;
      if (mpz_invert(inv.get_mpz_t(), y.get_den_mpz_t(), modulus.get_mpz_t()) == 0) {
        throw std::logic_error("from_rationals: scaled entry is not p-integral");
      }
      Integer z = y.get_num() * inv;
      mpz_mod(z.get_mpz_t(), z.get_mpz_t(), modulus.get_mpz_t());
      r.push_back(std::move(z));
    }
    return {p, n, budget, shift, std::move(r)};
  }

  [[nodiscard]] long prime() const { return p_; }
  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] long shift() const { return shift_; }
  [[nodiscard]] long digits() const { return budget_.digits; }
  [[nodiscard]] const PrecisionBudget& budget() const { return budget_; }
  [[nodiscard]] const std::vector<Integer>& residues() const { return residues_; }
  [[nodiscard]] const Integer& residue(std::size_t i, std::size_t j) const { return residues_[i * n_ + j]; }

  [[nodiscard]] PadicScalar entry(std::size_t i, std::size_t j) const {
    return PadicScalar::from_residue(p_, residues_[i * n_ + j], budget_.digits, shift_);
  }

  /// Lowest exponent any nonzero entry can certify: every singular number at
  /// or below this value is reported as a marker.
  [[nodiscard]] long singular_floor() const { return shift_ - budget_.digits + budget_.guard; }

  friend PadicMatrix operator*(const PadicMatrix& a, const PadicMatrix& b) {
    if (a.p_ != b.p_ || a.n_ != b.n_ || a.budget_.digits != b.budget_.digits) {
      throw std::invalid_argument("matrix product: incompatible operands");
    }
    const std::size_t n = a.n_;
    std::vector<Integer> r(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const Integer& aik = a.residues_[i * n + k];
        if (aik == 0) continue;
        for (std::size_t j = 0; j < n; ++j) r[i * n + j] += aik * b.residues_[k * n + j];
      }
    }
    return {a.p_, n, a.budget_, a.shift_ + b.shift_, std::move(r)};
  }

  friend bool operator==(const PadicMatrix&, const PadicMatrix&) = default;

 private:
  long p_;
  std::size_t n_;
  PrecisionBudget budget_;
  long shift_;
  std::vector<Integer> residues_;
};

/// Divisor valuations of the scaled integral matrix, increasing; `digits`
/// marks a divisor that vanishes in the window.
inline std::vector<long> smith_valuations(const PadicMatrix& m) {
  const std::size_t n = m.size();
  if (detail::SmallResidueRing::fits(m.prime(), m.digits())) {
    const detail::SmallResidueRing ring(m.prime(), m.digits());
    std::vector<std::uint64_t> a;
    a.reserve(n * n);
    for (const auto& x : m.residues()) a.push_back(ring.from(x));
    return detail::smith_valuations(ring, a, n);
  }
  const detail::BigResidueRing ring(m.prime(), m.digits());
  std::vector<Integer> a = m.residues();
  return detail::smith_valuations(ring, a, n);
}

/// Singular numbers via the Smith form: k_i = shift - v(d_i), sorted
/// decreasingly, with values at or below the precision floor reported as
/// markers. Elimination is exact modulo p^digits, so no certification
/// failure can occur once the matrix is in the window.
inline SingularTuple singular_numbers(const PadicMatrix& m) {
  const auto vals = smith_valuations(m);
  SingularTuple k;
  k.floor = m.singular_floor();
  const long cutoff = m.digits() - m.budget().guard;
  for (const long v : vals) {
    if (v < cutoff) {
      k.parts.push_back(m.shift() - v);
    } else {
      ++k.markers;
    }
  }
  return k;
}

/// Top-left n x n block.
inline PadicMatrix corner(const PadicMatrix& m, std::size_t n) {
  if (n < 1 || n > m.size()) throw std::invalid_argument("corner size out of range");
  std::vector<Integer> r;
  r.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) r.push_back(m.residue(i, j));
  }
  return {m.prime(), n, m.budget(), m.shift(), std::move(r)};
}

/// Whether a shift-0 matrix is invertible over Z_p (its reduction mod p is).
inline bool invertible_over_zp(const PadicMatrix& m) {
  if (m.shift() != 0) return false;
  std::vector<std::uint64_t> a;
  a.reserve(m.size() * m.size());
  const auto p = static_cast<unsigned long>(m.prime());
  for (const auto& x : m.residues()) a.push_back(mpz_fdiv_ui(x.get_mpz_t(), p));
  return detail::rank_mod_p(std::move(a), m.size(), p) == m.size();
}

/// Haar measure on GL(N, Z_p): uniform matrices over Z/p^E, rejected until
/// the reduction mod p is invertible.
inline PadicMatrix sample_haar_gl(std::size_t n, long p, PrecisionBudget budget, RngStream& rng) {
  require_prime(p);
  budget.validate();
  for (;;) {
    std::vector<Integer> r;
    r.reserve(n * n);
    for (std::size_t i = 0; i < n * n; ++i) r.push_back(uniform_residue(p, budget.digits, rng));
    PadicMatrix m(p, n, budget, 0, std::move(r));
    if (invertible_over_zp(m)) return m;
  }
}

/// B * diag(p^{-k_1}, ..., p^{-k_N}) * C for B, C in GL(N, Z_p).
///
/// Throws PrecisionExhausted when k_1 >= digits: the result would carry no
/// digits of its integral part.
inline PadicMatrix assemble_orbit(const SingularTuple& k, const PadicMatrix& b, const PadicMatrix& c) {
  if (!k.complete()) throw std::invalid_argument("assemble_orbit needs finite singular numbers");
  const std::size_t n = b.size();
  if (k.size() != n || c.size() != n || b.prime() != c.prime() || b.digits() != c.digits()) {
    throw std::invalid_argument("assemble_orbit: incompatible operands");
  }
  if (b.shift() != 0 || c.shift() != 0) throw std::invalid_argument("assemble_orbit: B and C must be integral");
  const long p = b.prime();
  const long digits = b.digits();
  const long top = k.parts.front();
  if (top >= digits) throw PrecisionExhausted("p^{-k_1} leaves no integral digits in the window");
  const Integer modulus = ipow(p, static_cast<unsigned long>(digits));
  // Scaled middle factor diag(p^{k_1 - k_i}); powers beyond the window vanish.
  std::vector<Integer> scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long e = top - k.parts[i];
    scale[i] = e < digits ? ipow(p, static_cast<unsigned long>(e)) : Integer(0);
  }
  std::vector<Integer> r(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < n; ++l) {
      if (scale[l] == 0) continue;
      Integer bl = b.residue(i, l) * scale[l];
      mpz_mod(bl.get_mpz_t(), bl.get_mpz_t(), modulus.get_mpz_t());
      if (bl == 0) continue;
      for (std::size_t j = 0; j < n; ++j) r[i * n + j] += bl * c.residue(l, j);
    }
  }
  return {p, n, b.budget(), top, std::move(r)};
}

/// Exponent g with gamma = p^g: the sum of the positive singular numbers.
inline long gamma_weight(const SingularTuple& k) {
  if (!k.complete() && k.floor > 0) throw std::invalid_argument("gamma_weight: positive part not certified");
  long g = 0;
  for (const long x : k.parts) {
    if (x > 0) g += x;
  }
  return g;
}

/// Hua density against vol at a matrix with singular numbers k:
/// coefficient * p^exponent, with the normalization and t^g folded into the
/// coefficient and p^{-2N g} into the exponent.
struct HuaDensity {
  long p;
  long exponent;
  Rational coefficient;

  [[nodiscard]] Rational value() const { return coefficient * ppow(p, exponent); }
};

/// (p^{-1-s}; p^{-1})_N^2 / (p^{-1-s}; p^{-1})_{2N} with t = p^{-s}.
inline Rational hua_normalization(long p, const Rational& t, long n) {
  const Rational q(1, p);
  const Rational a = t * q;
  const Rational an = pochhammer(a, q, n);
  return an * an / pochhammer(a, q, 2 * n);
}

inline HuaDensity hua_log_density(long p, const SingularTuple& k, const Rational& t) {
  require_prime(p);
  if (t <= 0 || t >= p) throw std::domain_error("t = p^{-s} must lie in (0, p)");
  const long n = static_cast<long>(k.size());
  const long g = gamma_weight(k);
  return {p, -2 * n * g, hua_normalization(p, t, n) * rpow(t, g)};
}

/// Parses one matrix entry: a rational optionally followed by "*p^v".
inline Rational parse_matrix_entry(std::string_view text, long p) {
  const std::string s(text);
  const auto star = s.find('*');
  if (star == std::string::npos) {
    // Bare power "p^v" or a plain rational.
    const auto caret = s.find('^');
    if (caret != std::string::npos) {
      if (std::stol(s.substr(0, caret)) != p) throw std::invalid_argument("entry '" + s + "' uses a different base");
      return ppow(p, std::stol(s.substr(caret + 1)));
    }
    return parse_rational(s);
  }
  const Rational coeff = parse_rational(s.substr(0, star));
  const std::string power = s.substr(star + 1);
  const auto caret = power.find('^');
  if (caret == std::string::npos) throw std::invalid_argument("entry '" + s + "' lacks an exponent");
  std::size_t used = 0;
  const long base = std::stol(power.substr(0, caret), &used);
  if (used != caret || base != p) throw std::invalid_argument("entry '" + s + "' uses a different base");
  const std::string exp_text = power.substr(caret + 1);
  const long exp = std::stol(exp_text, &used);
  if (used != exp_text.size()) throw std::invalid_argument("malformed exponent in '" + s + "'");
  return coeff * ppow(p, exp);
}

/// Text matrix: one row per line, whitespace- or comma-separated entries of
/// the form `a*p^v`. Blank lines and lines starting with '#' are skipped.
inline PadicMatrix parse_matrix_text(std::string_view text, long p, PrecisionBudget budget) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<Rational> entries;
  std::size_t cols = 0, rows = 0;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    std::string tok;
    std::size_t count = 0;
    while (row >> tok) {
      entries.push_back(parse_matrix_entry(tok, p));
      ++count;
    }
    if (count == 0) continue;
    if (rows == 0) cols = count;
    if (count != cols) throw std::invalid_argument("ragged matrix rows");
    ++rows;
  }
  if (rows == 0) throw std::invalid_argument("empty matrix");
  if (rows != cols) throw std::invalid_argument("matrix must be square");
  return PadicMatrix::from_rationals(p, rows, entries, budget);
}

inline std::string format_matrix_text(const PadicMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j != 0) out += ' ';
      out += m.entry(i, j).to_string();
    }
    out += '\n';
  }
  return out;
}

}  // namespace huapadic

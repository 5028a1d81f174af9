#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "huapadic/padic_matrix.hpp"
#include "huapadic/qseries.hpp"

namespace huapadic {

/// Hua parameters: prime p and t = p^{-s} with s > -1, i.e. 0 < t < p.
struct HuaParams {
  long p = 2;
  Rational t = 1;

  static HuaParams make(long p, const Rational& t) {
    require_prime(p);
    if (t <= 0 || t >= p) throw std::domain_error("t = p^{-s} must lie in (0, p), i.e. s > -1");
    return {p, t};
  }

  /// t = p^{-s} for an integer s > -1.
  static HuaParams from_integer_s(long p, long s) { return make(p, ppow(p, -s)); }

  [[nodiscard]] Rational q() const { return Rational(1, p); }
  [[nodiscard]] Rational a() const { return t / p; }
};

/// A partition, i.e. an element of Delta_0, stored by multiplicities
/// l_1, l_2, ... with tail sums X_i = l_i + l_{i+1} + ...
class Partition {
 public:
  Partition() = default;

  static Partition from_parts(std::vector<long> parts) {
    Partition lam;
    for (const long k : parts) {
      if (k < 0) throw std::invalid_argument("partition parts must be non-negative");
      if (k == 0) continue;
      if (static_cast<std::size_t>(k) > lam.mult_.size()) lam.mult_.resize(static_cast<std::size_t>(k), 0);
      ++lam.mult_[static_cast<std::size_t>(k - 1)];
    }
    return lam;
  }

  /// l[0] = l_1, l[1] = l_2, ...
  static Partition from_multiplicities(std::vector<long> l) {
    for (const long x : l) {
      if (x < 0) throw std::invalid_argument("negative multiplicity");
    }
    while (!l.empty() && l.back() == 0) l.pop_back();
    Partition lam;
    lam.mult_ = std::move(l);
    return lam;
  }

  /// x[0] = X_1 >= x[1] = X_2 >= ... (missing entries are 0).
  static Partition from_tail_sums(const std::vector<long>& x) {
    std::vector<long> l(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const long next = i + 1 < x.size() ? x[i + 1] : 0;
      if (x[i] < next) throw std::invalid_argument("tail sums must be weakly decreasing");
      l[i] = x[i] - next;
    }
    return from_multiplicities(std::move(l));
  }

  [[nodiscard]] long multiplicity(long i) const {
    if (i < 1 || static_cast<std::size_t>(i) > mult_.size()) return 0;
    return mult_[static_cast<std::size_t>(i - 1)];
  }

  /// X_i for i >= 1.
  [[nodiscard]] long tail_sum(long i) const {
    long s = 0;
    for (auto j = static_cast<std::size_t>(std::max(i, 1L)); j <= mult_.size(); ++j) s += mult_[j - 1];
    return s;
  }

  /// (X_1, ..., X_{k_1}); empty for the empty partition.
  [[nodiscard]] std::vector<long> tail_sums() const {
    std::vector<long> x(mult_.size());
    long s = 0;
    for (std::size_t i = mult_.size(); i-- > 0;) {
      s += mult_[i];
      x[i] = s;
    }
    return x;
  }

  [[nodiscard]] const std::vector<long>& multiplicities() const { return mult_; }

  /// Parts in decreasing order.
  [[nodiscard]] std::vector<long> parts() const {
    std::vector<long> k;
    for (std::size_t i = mult_.size(); i-- > 0;) k.insert(k.end(), static_cast<std::size_t>(mult_[i]), static_cast<long>(i + 1));
    return k;
  }

  [[nodiscard]] long length() const { return tail_sum(1); }
  [[nodiscard]] long largest() const { return static_cast<long>(mult_.size()); }
  [[nodiscard]] long weight() const {
    long w = 0;
    for (std::size_t i = 0; i < mult_.size(); ++i) w += static_cast<long>(i + 1) * mult_[i];
    return w;
  }

  /// "(2,1)", or "()" for the empty partition.
  [[nodiscard]] std::string label() const {
    std::string s = "(";
    bool first = true;
    for (const long k : parts()) {
      if (!first) s += ",";
      s += std::to_string(k);
      first = false;
    }
    return s + ")";
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<long> mult_;
};

/// Multiplicities l_i = #{j : k_j = i} of a finite tuple, over all i in Z.
class LProfile {
 public:
  LProfile() = default;

  static LProfile from_tuple(std::span<const long> k) {
    LProfile prof;
    for (const long x : k) ++prof.l_[x];
    prof.total_ = static_cast<long>(k.size());
    return prof;
  }

  static LProfile from_multiplicities(const std::map<long, long>& l) {
    LProfile prof;
    for (const auto& [i, m] : l) {
      if (m < 0) throw std::invalid_argument("negative multiplicity");
      if (m == 0) continue;
      prof.l_[i] = m;
      prof.total_ += m;
    }
    return prof;
  }

  [[nodiscard]] long total() const { return total_; }
  [[nodiscard]] long multiplicity(long i) const {
    const auto it = l_.find(i);
    return it == l_.end() ? 0 : it->second;
  }
  [[nodiscard]] const std::map<long, long>& multiplicities() const { return l_; }

  /// Sum_{j >= i} l_j.
  [[nodiscard]] long upper_tail(long i) const {
    long s = 0;
    for (auto it = l_.lower_bound(i); it != l_.end(); ++it) s += it->second;
    return s;
  }
  /// Sum_{j <= i} l_j.
  [[nodiscard]] long lower_tail(long i) const { return total_ - upper_tail(i + 1); }

  [[nodiscard]] long max_index() const { return l_.empty() ? 0 : l_.rbegin()->first; }
  [[nodiscard]] long min_index() const { return l_.empty() ? 0 : l_.begin()->first; }

  /// The tuple k_1 >= ... >= k_N.
  [[nodiscard]] std::vector<long> tuple() const {
    std::vector<long> k;
    for (auto it = l_.rbegin(); it != l_.rend(); ++it) k.insert(k.end(), static_cast<std::size_t>(it->second), it->first);
    return k;
  }

 private:
  std::map<long, long> l_;
  long total_ = 0;
};

/// Exact laws and brackets for one parameter pair (p, t).
///
/// Pochhammer values are cached, so an instance is not thread-safe; use one
/// per worker.
class HuaLaws {
 public:
  explicit HuaLaws(HuaParams hp) : hp_(HuaParams::make(hp.p, hp.t)), q_(hp_.q()), a_(hp_.a()) {
    qq_.emplace_back(1);
    aq_.emplace_back(1);
  }

  [[nodiscard]] const HuaParams& params() const { return hp_; }

  /// (1/p; 1/p)_n
  Rational qq(long n) {
    grow(n);
    return qq_[static_cast<std::size_t>(n)];
  }
  /// (t/p; 1/p)_n
  Rational aq(long n) {
    grow(n);
    return aq_[static_cast<std::size_t>(n)];
  }

  [[nodiscard]] Rational p_pow(long e) const { return ppow(hp_.p, e); }
  [[nodiscard]] Rational t_pow(long e) const { return rpow(hp_.t, e); }

  /// P^{(s)}(x1, x2); `with_s = false` gives P = P^{(0)}.
  Rational kernel(long x1, long x2, bool with_s = true) {
    if (x1 < 0 || x2 < 0) throw std::invalid_argument("kernel states must be non-negative");
    if (x2 > x1) return 0;
    const Rational a_x1 = with_s ? aq(x1) : qq(x1);
    const Rational a_x2 = with_s ? aq(x2) : qq(x2);
    Rational v = p_pow(-x2 * x2) * qq(x1) * a_x1 / (qq(x2) * qq(x1 - x2) * a_x2);
    if (with_s) v *= t_pow(x2);
    return v;
  }

  /// (p^{-1-s}; p^{-1})_N^2 / (p^{-1-s}; p^{-1})_{2N}
  Rational normalization(long n) { return aq(n) * aq(n) / aq(2 * n); }

  Rational pi_N(long n, long x) {
    if (x < 0 || x > n) return 0;
    const long y = n - x;
    return normalization(n) * qq(n) * qq(n) * p_pow(-y * y) * t_pow(y) / (qq(x) * qq(x) * qq(y) * aq(y));
  }

  Rational tilde_pi_N(long n, long x) {
    if (x < 0 || x > n) return 0;
    const long y = n - x;
    return normalization(n) * qq(n) * qq(n) * p_pow(-y * y) / (qq(x) * aq(x) * qq(y) * qq(y));
  }

  /// The exact factor p^{-x^2} t^x / ((q;q)_x (a;q)_x) of pi^{(s)}(x).
  Rational pi_s_factor(long x) {
    if (x < 0) return 0;
    return p_pow(-x * x) * t_pow(x) / (qq(x) * aq(x));
  }

  /// (t/p; 1/p)_inf
  [[nodiscard]] CertifiedValue infinite_factor(const Rational& eps) const { return pochhammer_inf(a_, q_, eps); }

  /// Bracket of width <= eps around pi^{(s)}(x).
  CertifiedValue pi_s(long x, const Rational& eps) {
    const Rational f = pi_s_factor(x);
    if (f == 0) return CertifiedValue::exact(0);
    return f * infinite_factor(eps / std::max(Rational(1), f));
  }

  /// Upper bound on sum_{x > m} pi_s_factor(x), from the ratio test.
  Rational pi_s_factor_tail(long m) {
    const Rational one = 1;
    const long first = m + 1;
    const Rational ratio = p_pow(-(2 * first + 1)) * hp_.t / ((one - q_) * (one - a_));
    if (ratio >= 1) throw std::logic_error("pi_s tail: ratio bound not contracting yet");
    return pi_s_factor(first) / (one - ratio);
  }

  Rational m_N_direct(std::span<const long> k) {
    const long n = static_cast<long>(k.size());
    if (!std::is_sorted(k.begin(), k.end(), std::greater<>())) throw std::invalid_argument("k must be weakly decreasing");
    long g = 0, e = 0;
    for (long j = 1; j <= n; ++j) {
      const long kj = k[static_cast<std::size_t>(j - 1)];
      if (kj > 0) g += kj;
      e += (2 * j - 2 * n - 1) * kj;
    }
    const LProfile prof = LProfile::from_tuple(k);
    return normalization(n) * t_pow(g) * p_pow(-2 * n * g - e) * qq(n) * qq(n) / multiplicity_product(prof);
  }

  Rational m_N_profile(const LProfile& prof) {
    const long n = prof.total();
    long weighted = 0;
    for (const auto& [i, l] : prof.multiplicities()) {
      if (i > 0) weighted += i * l;
    }
    long squares = 0;
    for (long i = 1; i <= std::max(prof.max_index(), 0L); ++i) {
      const long x = prof.upper_tail(i);
      squares += x * x;
    }
    for (long i = 1; i <= std::max(-prof.min_index(), 0L); ++i) {
      const long y = prof.lower_tail(-i);
      squares += y * y;
    }
    return normalization(n) * qq(n) * qq(n) * t_pow(weighted) * p_pow(-squares) / multiplicity_product(prof);
  }

  /// tilde_pi_N(X_0) * prod P^{(s)}(X_i, X_{i+1}) * prod P(Y_i, Y_{i+1}),
  /// X_i = sum_{j >= i} l_j, Y_i = sum_{j <= -i} l_j.
  Rational chain_product_rep1(const LProfile& prof) {
    const long n = prof.total();
    Rational v = tilde_pi_N(n, prof.upper_tail(0));
    for (long i = 0; prof.upper_tail(i) > 0; ++i) v *= kernel(prof.upper_tail(i), prof.upper_tail(i + 1), true);
    for (long i = 1; prof.lower_tail(-i) > 0; ++i) v *= kernel(prof.lower_tail(-i), prof.lower_tail(-i - 1), false);
    return v;
  }

  /// pi_N(Y_0) * prod_{i>=1} P^{(s)}(X_i, X_{i+1}) * prod_{i>=0} P(Y_i, Y_{i+1}).
  Rational chain_product_rep2(const LProfile& prof) {
    const long n = prof.total();
    Rational v = pi_N(n, prof.lower_tail(0));
    for (long i = 1; prof.upper_tail(i) > 0; ++i) v *= kernel(prof.upper_tail(i), prof.upper_tail(i + 1), true);
    for (long i = 0; prof.lower_tail(-i) > 0; ++i) v *= kernel(prof.lower_tail(-i), prof.lower_tail(-i - 1), false);
    return v;
  }

  /// Exact factor of nu^{(s)}: p^{-sum X_i^2} t^{sum i l_i} / prod (q;q)_{l_i}.
  Rational nu_s_factor(const Partition& lam) {
    long squares = 0;
    for (const long x : lam.tail_sums()) squares += x * x;
    Rational v = p_pow(-squares) * t_pow(lam.weight());
    for (const long l : lam.multiplicities()) v /= qq(l);
    return v;
  }

  /// Bracket of width <= eps around nu^{(s)}(lam).
  CertifiedValue nu_s(const Partition& lam, const Rational& eps) {
    const Rational f = nu_s_factor(lam);
    return f * infinite_factor(eps / std::max(Rational(1), f));
  }

  /// pi^{(s)}(X_1) * prod_{i >= 1} P^{(s)}(X_i, X_{i+1}): the chain form of nu^{(s)}.
  CertifiedValue nu_s_chain(const Partition& lam, const Rational& eps) {
    const auto x = lam.tail_sums();
    const long x1 = x.empty() ? 0 : x.front();
    Rational steps = 1;
    for (std::size_t i = 0; i < x.size(); ++i) steps *= kernel(x[i], i + 1 < x.size() ? x[i + 1] : 0, true);
    return steps * pi_s(x1, eps);
  }

 private:
  void grow(long n) {
    if (n < 0) throw std::invalid_argument("negative Pochhammer length");
    while (static_cast<long>(qq_.size()) <= n) {
      const long j = static_cast<long>(qq_.size()) - 1;
      const Rational qj = rpow(q_, j);
      qq_.push_back(qq_.back() * (1 - q_ * qj));
      aq_.push_back(aq_.back() * (1 - a_ * qj));
    }
  }

  Rational multiplicity_product(const LProfile& prof) {
    Rational d = 1;
    for (const auto& [i, l] : prof.multiplicities()) d *= qq(l);
    return d;
  }

  HuaParams hp_;
  Rational q_;
  Rational a_;
  std::vector<Rational> qq_;
  std::vector<Rational> aq_;
};

// Free-function forms of the laws.

inline Rational kernel_P(const HuaParams& hp, long x1, long x2) { return HuaLaws(hp).kernel(x1, x2, true); }
inline CertifiedValue pi_s(const HuaParams& hp, long x, const Rational& eps) { return HuaLaws(hp).pi_s(x, eps); }
inline Rational pi_N(const HuaParams& hp, long n, long x) { return HuaLaws(hp).pi_N(n, x); }
inline Rational tilde_pi_N(const HuaParams& hp, long n, long x) { return HuaLaws(hp).tilde_pi_N(n, x); }

inline Rational m_N_direct(const HuaParams& hp, const SingularTuple& k) {
  if (!k.complete()) throw std::invalid_argument("law evaluation needs certified singular numbers");
  return HuaLaws(hp).m_N_direct(k.parts);
}
inline Rational m_N_profile(const HuaParams& hp, const LProfile& prof) { return HuaLaws(hp).m_N_profile(prof); }
inline Rational chain_product_rep1(const HuaParams& hp, const LProfile& prof) {
  return HuaLaws(hp).chain_product_rep1(prof);
}
inline Rational chain_product_rep2(const HuaParams& hp, const LProfile& prof) {
  return HuaLaws(hp).chain_product_rep2(prof);
}
inline CertifiedValue nu_s(const HuaParams& hp, const Partition& lam, const Rational& eps) {
  return HuaLaws(hp).nu_s(lam, eps);
}

namespace detail {

inline Rational qq_product(long p, const LProfile& prof) {
  const Rational q(1, p);
  Rational d = 1;
  for (const auto& [i, l] : prof.multiplicities()) d *= pochhammer(q, q, l);
  return d;
}

}  // namespace detail

/// Law of the singular numbers of a vol-distributed matrix in Mat(N, Z_p),
/// extended by the same formula to Mat(N, Q_p).
inline Rational vol_singular_law(long p, const SingularTuple& k) {
  require_prime(p);
  if (!k.complete()) throw std::invalid_argument("law evaluation needs certified singular numbers");
  const long n = static_cast<long>(k.size());
  long e = 0;
  for (long i = 1; i <= n; ++i) e += (2 * i - 2 * n - 1) * k.parts[static_cast<std::size_t>(i - 1)];
  const Rational q(1, p);
  const Rational qn = pochhammer(q, q, n);
  return ppow(p, -e) * qn * qn / detail::qq_product(p, LProfile::from_tuple(k.parts));
}

/// Haar mass of the double coset GL(N,Z_p) diag(p^{-k}) GL(N,Z_p).
inline Rational haar_orbit_mass(long p, const SingularTuple& k) {
  require_prime(p);
  if (!k.complete()) throw std::invalid_argument("law evaluation needs certified singular numbers");
  const long n = static_cast<long>(k.size());
  long e = 0;
  for (long i = 1; i <= n; ++i) e += (2 * i - n - 1) * k.parts[static_cast<std::size_t>(i - 1)];
  const Rational q(1, p);
  return ppow(p, -e) * pochhammer(q, q, n) / detail::qq_product(p, LProfile::from_tuple(k.parts));
}

/// Product form of nu^{(s)}(k_1 < x) for s in {0, 1}:
/// s = 0 runs over i >= 1 with i = 0, +-x mod 2x+1; s = 1 over i >= 2 with
/// i = 0, +-1 mod 2x+1.
inline CertifiedValue rr_cdf(long p, int s, long x, const Rational& eps) {
  require_prime(p);
  if (x < 2) throw std::invalid_argument("rr_cdf needs x >= 2");
  const long m = 2 * x + 1;
  const Rational q(1, p);
  if (s == 0) {
    return power_product_inf(q, 1, [m, x](long i) {
      const long r = i % m;
      return r == 0 || r == x || r == x + 1;
    }, eps);
  }
  if (s == 1) {
    return power_product_inf(q, 2, [m](long i) {
      const long r = i % m;
      return r == 0 || r == 1 || r == m - 1;
    }, eps);
  }
  throw std::invalid_argument("rr_cdf is available for s = 0 and s = 1 only");
}

/// nu^{(s)}(k_1 < x) by summing over the number of parts m = X_1:
/// sum_m pi^{(s)}(m) * P^{x-1}(m, 0), truncated with a ratio-test tail bound.
inline CertifiedValue rr_partition_sum(const HuaParams& hp, long x, const Rational& eps) {
  if (x < 1) throw std::invalid_argument("rr_partition_sum needs x >= 1");
  HuaLaws laws(hp);
  const Rational half_eps = eps / 2;
  // Choose the cutoff M so that the truncated tail is below eps/2.
  long cutoff = 0;
  CertifiedValue phi = laws.infinite_factor(half_eps);
  for (;; ++cutoff) {
    const Rational ratio = laws.p_pow(-(2 * cutoff + 3)) * hp.t / ((1 - hp.q()) * (1 - hp.a()));
    if (ratio < 1 && phi.upper * laws.pi_s_factor_tail(cutoff) <= half_eps) break;
  }
  Rational exact_sum = 0;
  for (long m = 0; m <= cutoff; ++m) {
    // Distribution of X_x given X_1 = m; we need its mass at 0.
    std::vector<Rational> dist(static_cast<std::size_t>(m + 1), 0);
    dist[static_cast<std::size_t>(m)] = 1;
    for (long step = 1; step < x; ++step) {
      std::vector<Rational> next(dist.size(), 0);
      for (long from = 0; from <= m; ++from) {
        const Rational& w = dist[static_cast<std::size_t>(from)];
        if (w == 0) continue;
        for (long to = 0; to <= from; ++to) next[static_cast<std::size_t>(to)] += w * laws.kernel(from, to, true);
      }
      dist = std::move(next);
    }
    exact_sum += laws.pi_s_factor(m) * dist[0];
  }
  const Rational tail = phi.upper * laws.pi_s_factor_tail(cutoff);
  return {phi.lower * exact_sum, phi.upper * exact_sum + tail, cutoff};
}

/// Bracket on TV(pi_N^{(s)}(N - .), pi^{(s)}), the tail x > N bounded by the ratio test.
inline CertifiedValue tv_pi_boundary(const HuaParams& hp, long n, const Rational& eps) {
  HuaLaws laws(hp);
  const CertifiedValue phi = laws.infinite_factor(eps);
  Rational lo = 0, hi = 0;
  for (long x = 0; x <= n; ++x) {
    const Rational e = laws.pi_N(n, n - x);
    const Rational f = laws.pi_s_factor(x);
    const Rational l = f * phi.lower, u = f * phi.upper;
    const Rational d_lo = e < l ? l - e : (e > u ? e - u : Rational(0));
    const Rational d_hi = std::max(Rational(abs(e - l)), Rational(abs(e - u)));
    lo += d_lo;
    hi += d_hi;
  }
  // Ratio test needs 2N+3 large enough; fall back to a direct sum otherwise.
  long m = n;
  Rational tail_exact = 0;
  for (;; ++m) {
    const Rational ratio = laws.p_pow(-(2 * m + 3)) * hp.t / ((1 - hp.q()) * (1 - hp.a()));
    if (ratio < 1) break;
    tail_exact += laws.pi_s_factor(m + 1);
  }
  const Rational tail_hi = phi.upper * (tail_exact + laws.pi_s_factor_tail(m));
  const Rational tail_lo = phi.lower * tail_exact;
  return {(lo + tail_lo) / 2, (hi + tail_hi) / 2, phi.terms};
}

/// Both sides of the three rewriting identities for a tuple k.
struct RewriteIdentities {
  long item1_lhs = 0, item1_upper_tails = 0, item1_complements = 0;
  long item2_lhs = 0, item2_rhs = 0;
  long item3_lhs = 0, item3_from_zero = 0, item3_from_one = 0;

  [[nodiscard]] bool item1() const { return item1_lhs == item1_upper_tails && item1_lhs == item1_complements; }
  [[nodiscard]] bool item2() const { return item2_lhs == item2_rhs; }
  [[nodiscard]] bool item3() const { return item3_lhs == item3_from_zero && item3_lhs == item3_from_one; }
};

inline RewriteIdentities rewrite_identity_check(const SingularTuple& k) {
  if (!k.complete()) throw std::invalid_argument("identity check needs certified singular numbers");
  const auto& parts = k.parts;
  const long n = static_cast<long>(parts.size());
  const LProfile prof = LProfile::from_tuple(parts);
  RewriteIdentities r;
  for (long j = 1; j <= n; ++j) {
    const long kj = parts[static_cast<std::size_t>(j - 1)];
    if (kj > 0) {
      r.item1_lhs += kj * (2 * j - 1);
      r.item3_lhs += kj;
    } else {
      r.item2_lhs += kj * (2 * j - 2 * n - 1);
    }
  }
  for (long i = 1; i <= std::max(prof.max_index(), 0L); ++i) {
    const long x = prof.upper_tail(i);
    r.item1_upper_tails += x * x;
  }
  for (long i = 0; i <= std::max(prof.max_index(), 0L); ++i) {
    const long c = n - prof.lower_tail(i);
    r.item1_complements += c * c;
  }
  for (long i = 1; i <= std::max(-prof.min_index(), 0L); ++i) {
    const long y = prof.lower_tail(-i);
    r.item2_rhs += y * y;
  }
  for (const auto& [i, l] : prof.multiplicities()) {
    if (i >= 0) r.item3_from_zero += i * l;
    if (i >= 1) r.item3_from_one += i * l;
  }
  return r;
}

/// A finitely supported law with exact masses; `deficit` is the mass of all
/// outcomes not listed.
struct ExactLaw {
  std::map<std::string, Rational> mass;
  Rational deficit = 0;

  [[nodiscard]] Rational listed_total() const {
    Rational s = 0;
    for (const auto& [label, m] : mass) s += m;
    return s;
  }
};

/// A law whose listed masses are certified brackets.
struct BracketLaw {
  std::map<std::string, CertifiedValue> mass;
  CertifiedValue deficit;
};

/// Calls f on every weakly decreasing n-tuple with entries in [lo, hi].
inline void for_each_decreasing_tuple(long n, long lo, long hi, const std::function<void(const std::vector<long>&)>& f) {
  std::vector<long> k(static_cast<std::size_t>(n));
  std::function<void(long, long)> rec = [&](long pos, long upper) {
    if (pos == n) {
      f(k);
      return;
    }
    for (long v = upper; v >= lo; --v) {
      k[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, v);
    }
  };
  if (n == 0) {
    f(k);
    return;
  }
  rec(0, hi);
}

/// m_N^{(s)} restricted to tuples with all |k_i| <= bound; the deficit is exact.
inline ExactLaw m_N_law(const HuaParams& hp, long n, long bound) {
  HuaLaws laws(hp);
  ExactLaw law;
  for_each_decreasing_tuple(n, -bound, bound, [&](const std::vector<long>& k) {
    law.mass[SingularTuple::exact(k).label()] = laws.m_N_direct(k);
  });
  law.deficit = 1 - law.listed_total();
  return law;
}

/// Calls f on every partition with at most `max_length` parts, each at most `max_part`.
inline void for_each_partition(long max_length, long max_part, const std::function<void(const Partition&)>& f) {
  for_each_decreasing_tuple(max_length, 0, max_part, [&](const std::vector<long>& k) { f(Partition::from_parts(k)); });
}

/// nu^{(s)} on partitions with X_1 <= max_length. Parts are cut at the
/// smallest size whose dropped mass is provably below eps; the deficit
/// bracket covers everything else.
inline BracketLaw nu_law(const HuaParams& hp, long max_length, const Rational& eps) {
  HuaLaws laws(hp);
  const CertifiedValue phi = laws.infinite_factor(eps);
  // nu(k_1 >= K) <= P(chain still positive after K-1 steps) is bounded through
  // sum over starting X_1 of pi(X_1) * (max_x P(x, >0))^{K-1}.
  Rational stay = 0;
  for (long x = 1; x <= max_length; ++x) stay = std::max(stay, Rational(1 - laws.kernel(x, 0, true)));
  long max_part = 1;
  Rational bound = stay;
  while (bound > eps / 4) {
    bound *= stay;
    ++max_part;
  }
  BracketLaw law;
  CertifiedValue listed = CertifiedValue::exact(0);
  for_each_partition(max_length, max_part, [&](const Partition& lam) {
    const CertifiedValue v = laws.nu_s_factor(lam) * phi;
    law.mass[lam.label()] = v;
    listed = listed + v;
  });
  law.deficit = {1 - listed.upper, 1 - listed.lower, max_part};
  if (law.deficit.lower < 0) law.deficit.lower = 0;
  return law;
}

}  // namespace huapadic

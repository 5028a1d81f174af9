#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "huapadic/laws.hpp"
#include "huapadic/padic_matrix.hpp"
#include "huapadic/rng.hpp"

namespace huapadic {

inline constexpr long kChainStepCap = 10000;

/// States X_1 >= X_2 >= ... of a kernel chain, ending with the absorbing 0.
struct ChainPath {
  std::vector<long> states;

  [[nodiscard]] bool absorbed() const { return !states.empty() && states.back() == 0; }
  [[nodiscard]] Partition partition() const {
    std::vector<long> tails(states);
    while (!tails.empty() && tails.back() == 0) tails.pop_back();
    return Partition::from_tail_sums(tails);
  }
};

/// Index of the first cumulative value exceeding a lazily drawn uniform.
inline std::size_t draw_from_cumulative(const std::vector<Rational>& cumulative, RngStream& rng) {
  LazyUniform u(rng);
  for (std::size_t i = 0; i + 1 < cumulative.size(); ++i) {
    if (u.less_than(cumulative[i])) return i;
  }
  return cumulative.size() - 1;
}

/// Exact samplers for the chains and laws attached to one (p, t).
///
/// Every draw consumes random bits as a function of the stream alone, so the
/// caches never influence outputs. Not thread-safe; use one per worker.
class HuaSampler {
 public:
  explicit HuaSampler(HuaParams hp) : laws_(hp) {}

  [[nodiscard]] const HuaParams& params() const { return laws_.params(); }
  HuaLaws& laws() { return laws_; }

  /// One step of P^{(s)} (or P when `with_s` is false) from state x.
  long kernel_step(long x, bool with_s, RngStream& rng) {
    if (x < 0) throw std::invalid_argument("kernel state must be non-negative");
    if (x == 0) return 0;
    auto& rows = with_s ? rows_s_ : rows_0_;
    auto it = rows.find(x);
    if (it == rows.end()) {
      std::vector<Rational> cum;
      Rational acc = 0;
      for (long y = 0; y <= x; ++y) {
        acc += laws_.kernel(x, y, with_s);
        cum.push_back(acc);
      }
      if (acc != 1) throw std::logic_error("kernel row does not sum to one");
      it = rows.emplace(x, std::move(cum)).first;
    }
    return static_cast<long>(draw_from_cumulative(it->second, rng));
  }

  /// Chain from x1 until absorption at 0.
  ChainPath chain(long x1, bool with_s, RngStream& rng) {
    ChainPath path;
    path.states.push_back(x1);
    long x = x1;
    for (long step = 0; x != 0; ++step) {
      if (step >= kChainStepCap) throw std::logic_error("kernel chain exceeded the step cap");
      x = kernel_step(x, with_s, rng);
      path.states.push_back(x);
    }
    return path;
  }

  /// x ~ pi_N^{(s)} on [0, N].
  long pi_N_draw(long n, RngStream& rng) {
    auto it = pi_N_rows_.find(n);
    if (it == pi_N_rows_.end()) {
      std::vector<Rational> cum;
      Rational acc = 0;
      for (long x = 0; x <= n; ++x) {
        acc += laws_.pi_N(n, x);
        cum.push_back(acc);
      }
      if (acc != 1) throw std::logic_error("pi_N does not sum to one");
      it = pi_N_rows_.emplace(n, std::move(cum)).first;
    }
    return static_cast<long>(draw_from_cumulative(it->second, rng));
  }

  /// x ~ pi^{(s)} on the non-negative integers.
  ///
  /// The cumulative sums are phi * S_x with S_x exact and phi bracketed; the
  /// uniform and the bracket are refined until the comparison is certain.
  long pi_s_draw(RngStream& rng) {
    LazyUniform u(rng);
    std::size_t level = 0;
    for (long x = 0;; ++x) {
      const Rational& s = cumulative_factor(x);
      for (;;) {
        const CertifiedValue& phi = phi_at(level);
        if (u.upper() <= phi.lower * s) return x;
        if (u.lower() >= phi.upper * s) break;
        if (u.upper() - u.lower() >= phi.width() * s) {
          u.refine();
        } else {
          ++level;
        }
      }
    }
  }

  /// Partition distributed as nu^{(s)}: X_1 ~ pi^{(s)}, then the P^{(s)} chain.
  Partition nu(RngStream& rng) { return nu_path(rng).partition(); }

  ChainPath nu_path(RngStream& rng) { return chain(pi_s_draw(rng), true, rng); }

  /// Singular numbers distributed as m_N^{(s)}: x = sum_{i<=0} l_i ~ pi_N,
  /// the P^{(s)} chain from N - x gives the positive parts, and the P chain
  /// from x gives the non-positive parts.
  SingularTuple hua_singulars(long n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("hua_singulars needs N >= 1");
    const long x = pi_N_draw(n, rng);
    const ChainPath up = chain(n - x, true, rng);
    const ChainPath down = chain(x, false, rng);
    std::vector<long> k;
    k.reserve(static_cast<std::size_t>(n));
    for (std::size_t i = up.states.size() - 1; i-- > 0;) {
      const long part = static_cast<long>(i) + 1;
      k.insert(k.end(), static_cast<std::size_t>(up.states[i] - up.states[i + 1]), part);
    }
    for (std::size_t i = 0; i + 1 < down.states.size(); ++i) {
      const long part = -static_cast<long>(i);
      k.insert(k.end(), static_cast<std::size_t>(down.states[i] - down.states[i + 1]), part);
    }
    return SingularTuple::exact(std::move(k));
  }

 private:
  const Rational& cumulative_factor(long x) {
    while (static_cast<long>(cum_factor_.size()) <= x) {
      const long y = static_cast<long>(cum_factor_.size());
      const Rational prev = cum_factor_.empty() ? Rational(0) : cum_factor_.back();
      cum_factor_.push_back(prev + laws_.pi_s_factor(y));
    }
    return cum_factor_[static_cast<std::size_t>(x)];
  }

  const CertifiedValue& phi_at(std::size_t level) {
    while (phi_.size() <= level) {
      Rational eps(1);
      eps /= ipow(2, 48 + 32 * static_cast<unsigned long>(phi_.size()));
      phi_.push_back(laws_.infinite_factor(eps));
    }
    return phi_[level];
  }

  HuaLaws laws_;
  std::map<long, std::vector<Rational>> rows_s_;
  std::map<long, std::vector<Rational>> rows_0_;
  std::map<long, std::vector<Rational>> pi_N_rows_;
  std::vector<Rational> cum_factor_;
  std::vector<CertifiedValue> phi_;
};

inline long sample_kernel_step(const HuaParams& hp, long x, RngStream& rng) {
  return HuaSampler(hp).kernel_step(x, true, rng);
}

inline Partition sample_nu(const HuaParams& hp, RngStream& rng) { return HuaSampler(hp).nu(rng); }

inline SingularTuple sample_hua_singulars(const HuaParams& hp, long n, RngStream& rng) {
  return HuaSampler(hp).hua_singulars(n, rng);
}

/// M_N^{(s)}: singular numbers from m_N^{(s)}, then B diag(p^{-k}) C with
/// independent Haar B, C.
///
/// B and C carry E + max(k_1, 0) digits, so the result is known modulo p^E
/// whatever k_1 is and singular numbers above -E + guard are certified.
inline PadicMatrix sample_hua_matrix(HuaSampler& sampler, long n, PrecisionBudget budget, RngStream& rng) {
  budget.validate();
  const SingularTuple k = sampler.hua_singulars(n, rng);
  const PrecisionBudget wide{budget.digits + std::max(k.parts.front(), 0L), budget.guard};
  const long p = sampler.params().p;
  const auto size = static_cast<std::size_t>(n);
  const PadicMatrix b = sample_haar_gl(size, p, wide, rng);
  const PadicMatrix c = sample_haar_gl(size, p, wide, rng);
  return assemble_orbit(k, b, c);
}

inline PadicMatrix sample_hua_matrix(const HuaParams& hp, long n, PrecisionBudget budget, RngStream& rng) {
  HuaSampler sampler(hp);
  return sample_hua_matrix(sampler, n, budget, rng);
}

/// N x N corner of A_k = sum_{M: k_M > 0} p^{-k_M} X^{(M)} (Y^{(M)})^T + Z
/// with all X, Y, Z entries independent Haar on Z_p.
///
/// Stored scaled by p^{k_1} in a window of E + k_1 digits, so the corner is
/// known modulo p^E.
inline PadicMatrix sample_ergodic_matrix(const Partition& k, long p, long n, PrecisionBudget budget, RngStream& rng) {
  require_prime(p);
  budget.validate();
  if (n < 1) throw std::invalid_argument("ergodic matrix needs N >= 1");
  const long top = k.largest();
  const PrecisionBudget wide{budget.digits + top, budget.guard};
  const auto size = static_cast<std::size_t>(n);
  const Integer modulus = ipow(p, static_cast<unsigned long>(wide.digits));
  std::vector<Integer> r(size * size, 0);
  std::vector<Integer> x(size), y(size);
  for (const long part : k.parts()) {
    for (auto& v : x) v = uniform_residue(p, wide.digits, rng);
    for (auto& v : y) v = uniform_residue(p, wide.digits, rng);
    const Integer scale = ipow(p, static_cast<unsigned long>(top - part));
    for (std::size_t i = 0; i < size; ++i) {
      const Integer xi = scale * x[i];
      for (std::size_t j = 0; j < size; ++j) r[i * size + j] += xi * y[j];
    }
  }
  const Integer zscale = ipow(p, static_cast<unsigned long>(top));
  for (auto& v : r) {
    v += zscale * uniform_residue(p, budget.digits, rng);
    mpz_mod(v.get_mpz_t(), v.get_mpz_t(), modulus.get_mpz_t());
  }
  return {p, size, wide, top, std::move(r)};
}

}  // namespace huapadic

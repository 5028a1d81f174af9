#include <gtest/gtest.h>

#include "huapadic/laws.hpp"

using namespace huapadic;

namespace {

const Rational kEps = rpow(Rational(10), -12);

std::vector<HuaParams> grid() {
  std::vector<HuaParams> g;
  for (const long p : {2L, 3L, 5L}) {
    for (const Rational& t : {Rational(1), fraction(1, p), fraction(3, 2)}) g.push_back(HuaParams::make(p, t));
  }
  return g;
}

/// m_1^{(s)}(k) from the N = 1 density C t^{k+} p^{-2 k+} times the shell
/// volume (1 - 1/p) p^{k}, with C = (1 - a) / (1 - a/p), a = t/p.
Rational m1_by_shells(const HuaParams& hp, long k) {
  const Rational a = hp.t / hp.p;
  const Rational c = (1 - a) / (1 - a / hp.p);
  const long kp = std::max(k, 0L);
  return c * rpow(hp.t, kp) * ppow(hp.p, -2 * kp) * (1 - fraction(1, hp.p)) * ppow(hp.p, k);
}

}  // namespace

TEST(HuaParams, Domain) {
  EXPECT_NO_THROW(HuaParams::make(2, fraction(3, 2)));
  EXPECT_THROW(HuaParams::make(2, 2), std::domain_error);
  EXPECT_THROW(HuaParams::make(2, 0), std::domain_error);
  EXPECT_THROW(HuaParams::make(4, 1), std::invalid_argument);
  EXPECT_EQ(HuaParams::from_integer_s(3, 2).t, fraction(1, 9));
}

TEST(Partition, Representations) {
  const auto lam = Partition::from_tail_sums({2, 1});
  EXPECT_EQ(lam.parts(), (std::vector<long>{2, 1}));
  EXPECT_EQ(lam.multiplicity(1), 1);
  EXPECT_EQ(lam.multiplicity(2), 1);
  EXPECT_EQ(lam, Partition::from_parts({1, 2, 0}));
  EXPECT_EQ(lam.label(), "(2,1)");
  EXPECT_EQ(Partition().label(), "()");
  EXPECT_EQ(Partition::from_parts({3, 1, 1}).tail_sums(), (std::vector<long>{3, 1, 1}));
  EXPECT_EQ(Partition::from_parts({3, 1, 1}).weight(), 5);
  EXPECT_THROW(Partition::from_tail_sums({1, 2}), std::invalid_argument);
}

TEST(Kernel, ExampleRows) {
  HuaLaws laws(HuaParams::make(2, 1));
  EXPECT_EQ(laws.kernel(1, 0), fraction(1, 2));
  EXPECT_EQ(laws.kernel(1, 1), fraction(1, 2));
  EXPECT_EQ(laws.kernel(0, 0), Rational(1));
  EXPECT_EQ(laws.kernel(1, 2), Rational(0));
}

TEST(Kernel, RowsSumToOne) {
  for (const auto& hp : grid()) {
    HuaLaws laws(hp);
    for (long x1 = 0; x1 <= 20; ++x1) {
      Rational s = 0, s0 = 0;
      for (long x2 = 0; x2 <= x1; ++x2) {
        s += laws.kernel(x1, x2, true);
        s0 += laws.kernel(x1, x2, false);
      }
      EXPECT_EQ(s, 1);
      EXPECT_EQ(s0, 1);
    }
  }
}

TEST(Kernel, WithoutSIsTheTEqualsOneKernel) {
  HuaLaws a(HuaParams::make(3, fraction(1, 3))), b(HuaParams::make(3, 1));
  for (long x1 = 0; x1 <= 8; ++x1) {
    for (long x2 = 0; x2 <= x1; ++x2) EXPECT_EQ(a.kernel(x1, x2, false), b.kernel(x1, x2, true));
  }
}

TEST(PiN, BothFormsSumToOne) {
  for (const auto& hp : grid()) {
    HuaLaws laws(hp);
    for (long n = 1; n <= 12; ++n) {
      Rational s = 0, st = 0;
      for (long x = 0; x <= n; ++x) {
        s += laws.pi_N(n, x);
        st += laws.tilde_pi_N(n, x);
      }
      EXPECT_EQ(s, 1);
      EXPECT_EQ(st, 1);
    }
    EXPECT_EQ(laws.pi_N(3, 4), 0);
  }
}

TEST(MN, OneByOneExamples) {
  HuaLaws laws(HuaParams::make(2, 1));
  const std::vector<long> k0{0}, km{-1}, kp{1};
  EXPECT_EQ(laws.m_N_direct(k0), fraction(1, 3));
  EXPECT_EQ(laws.m_N_direct(km), fraction(1, 6));
  EXPECT_EQ(laws.m_N_direct(kp), fraction(1, 6));
  EXPECT_EQ(laws.normalization(1), fraction(2, 3));
}

TEST(MN, OneByOneMatchesShellIntegration) {
  for (const auto& hp : grid()) {
    HuaLaws laws(hp);
    for (long k = -6; k <= 6; ++k) {
      const std::vector<long> kv{k};
      EXPECT_EQ(laws.m_N_direct(kv), m1_by_shells(hp, k)) << "k=" << k;
    }
  }
}

TEST(MN, FourFormsAgreeOnRandomTuples) {
  RngStream rng(5);
  for (const auto& hp : grid()) {
    HuaLaws laws(hp);
    for (int i = 0; i < 40; ++i) {
      const long n = 1 + static_cast<long>(rng.uniform_below(5));
      std::vector<long> k(static_cast<std::size_t>(n));
      for (auto& x : k) x = static_cast<long>(rng.uniform_below(11)) - 5;
      std::sort(k.begin(), k.end(), std::greater<>());
      const auto prof = LProfile::from_tuple(k);
      const Rational v = laws.m_N_direct(k);
      EXPECT_EQ(v, laws.m_N_profile(prof));
      EXPECT_EQ(v, laws.chain_product_rep1(prof));
      EXPECT_EQ(v, laws.chain_product_rep2(prof));
    }
  }
}

TEST(MN, ProfileOfZeros) {
  HuaLaws laws(HuaParams::make(2, 1));
  const std::vector<long> k{0, 0};
  EXPECT_EQ(laws.m_N_profile(LProfile::from_multiplicities({{0, 2}})), laws.m_N_direct(k));
}

TEST(MN, MassNearlyOneAndDeficitShrinks) {
  const auto hp = HuaParams::make(2, 1);
  const auto small = m_N_law(hp, 2, 4);
  const auto large = m_N_law(hp, 2, 10);
  EXPECT_GT(small.deficit, large.deficit);
  EXPECT_GT(large.deficit, 0);
  // The tail is geometric: roughly 2^{-10} is left outside |k_i| <= 10.
  EXPECT_LT(large.deficit, fraction(1, 500));
  EXPECT_EQ(large.listed_total() + large.deficit, 1);
}

TEST(MN, RefusesUnsortedAndIncomplete) {
  HuaLaws laws(HuaParams::make(2, 1));
  const std::vector<long> bad{0, 1};
  EXPECT_THROW(laws.m_N_direct(bad), std::invalid_argument);
  SingularTuple k;
  k.markers = 1;
  EXPECT_THROW(m_N_direct(HuaParams::make(2, 1), k), std::invalid_argument);
}

TEST(VolLaw, Examples) {
  for (long j = 0; j < 6; ++j) EXPECT_EQ(vol_singular_law(2, SingularTuple::exact({-j})), ppow(2, -j - 1));
  EXPECT_EQ(vol_singular_law(2, SingularTuple::exact({0, 0})), fraction(3, 8));
}

TEST(VolLaw, IsTheTZeroLimitWeightedByShells) {
  // For k_1 <= 0 the Hua mass is the normalization times the vol mass.
  const auto hp = HuaParams::make(3, fraction(1, 3));
  HuaLaws laws(hp);
  const std::vector<long> k{0, -1, -1};
  EXPECT_EQ(laws.m_N_direct(k), laws.normalization(3) * vol_singular_law(3, SingularTuple::exact(k)));
}

TEST(HaarOrbit, Examples) {
  EXPECT_EQ(haar_orbit_mass(3, SingularTuple::exact({0, 0, 0})), 1);
  for (long k = -3; k <= 3; ++k) EXPECT_EQ(haar_orbit_mass(5, SingularTuple::exact({k})), 1);
  // Shifting every singular number by one leaves the mass unchanged.
  EXPECT_EQ(haar_orbit_mass(2, SingularTuple::exact({2, 0})), haar_orbit_mass(2, SingularTuple::exact({1, -1})));
}

TEST(PiS, SumsToOne) {
  for (const auto& hp : grid()) {
    HuaLaws laws(hp);
    CertifiedValue s = CertifiedValue::exact(0);
    for (long x = 0; x <= 12; ++x) s = s + laws.pi_s(x, kEps);
    const Rational tail = laws.pi_s_factor_tail(12);
    EXPECT_LE(s.lower, 1);
    EXPECT_GE(s.upper + tail, 1);
  }
}

TEST(PiS, IsTheLimitOfPiN) {
  const auto hp = HuaParams::make(2, fraction(1, 2));
  const auto tv20 = tv_pi_boundary(hp, 20, rpow(Rational(10), -20));
  const auto tv40 = tv_pi_boundary(hp, 40, rpow(Rational(10), -20));
  EXPECT_LT(tv40.upper, tv20.lower);
  EXPECT_LT(tv40.upper, fraction(1, 1000000));
}

TEST(Nu, EmptyAndSingleBoxShareTheInfiniteProduct) {
  HuaLaws laws(HuaParams::make(2, 1));
  const auto e = laws.nu_s(Partition(), kEps);
  const auto one = laws.nu_s(Partition::from_parts({1}), kEps);
  EXPECT_NEAR(e.approx(), 0.288788095, 1e-9);
  EXPECT_TRUE(e.overlaps(one));
  EXPECT_TRUE(one.overlaps(laws.pi_s(1, kEps) * CertifiedValue::exact(laws.kernel(1, 0))));
}

TEST(Nu, FactorizationMatchesChain) {
  for (const auto& hp : grid()) {
    HuaLaws laws(hp);
    for_each_partition(3, 4, [&](const Partition& lam) {
      EXPECT_TRUE(laws.nu_s(lam, kEps).overlaps(laws.nu_s_chain(lam, kEps))) << lam.label();
    });
  }
}

TEST(Nu, LawCoversTotalMass) {
  const auto law = nu_law(HuaParams::make(2, 1), 3, fraction(1, 1000000));
  CertifiedValue s = law.deficit;
  for (const auto& [label, m] : law.mass) s = s + m;
  EXPECT_TRUE(s.contains(1));
}

TEST(RogersRamanujan, ProductMatchesPartitionSum) {
  for (const long p : {2L, 3L}) {
    for (long x = 2; x <= 4; ++x) {
      const auto prod0 = rr_cdf(p, 0, x, kEps);
      const auto sum0 = rr_partition_sum(HuaParams::make(p, 1), x, kEps);
      EXPECT_TRUE(prod0.overlaps(sum0)) << p << " " << x;
      const auto prod1 = rr_cdf(p, 1, x, kEps);
      const auto sum1 = rr_partition_sum(HuaParams::make(p, fraction(1, p)), x, kEps);
      EXPECT_TRUE(prod1.overlaps(sum1)) << p << " " << x;
    }
  }
}

TEST(RogersRamanujan, TendsToOne) {
  // The first omitted factors are (1 - 2^-20)(1 - 2^-21).
  const auto v = rr_cdf(2, 0, 20, kEps);
  EXPECT_GT(v.lower, 1 - fraction(3, 2000000));
  EXPECT_LT(v.upper, 1 - fraction(1, 1000000));
  // Remaining factors start at 2^-62 and 2^-82.
  const Rational truncated = (1 - ppow(2, -20)) * (1 - ppow(2, -21)) * (1 - ppow(2, -41)) * (1 - ppow(2, -61));
  EXPECT_LE(abs(v.midpoint() - truncated), v.width() + ppow(2, -60));
  EXPECT_THROW(rr_cdf(2, 2, 3, kEps), std::invalid_argument);
  EXPECT_THROW(rr_cdf(2, 0, 1, kEps), std::invalid_argument);
}

TEST(Rewrite, ZeroTuple) {
  const auto r = rewrite_identity_check(SingularTuple::exact({0, 0, 0}));
  EXPECT_EQ(r.item1_lhs, 0);
  EXPECT_EQ(r.item2_lhs, 0);
  EXPECT_EQ(r.item3_lhs, 0);
  EXPECT_TRUE(r.item1() && r.item2() && r.item3());
}

TEST(Rewrite, RandomTuples) {
  RngStream rng(6);
  for (int i = 0; i < 2000; ++i) {
    const auto n = 1 + rng.uniform_below(8);
    std::vector<long> k(n);
    for (auto& x : k) x = static_cast<long>(rng.uniform_below(13)) - 6;
    const auto r = rewrite_identity_check(SingularTuple::exact(k));
    ASSERT_TRUE(r.item1() && r.item2() && r.item3());
  }
}

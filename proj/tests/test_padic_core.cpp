#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "huapadic/padic_scalar.hpp"
#include "huapadic/rational.hpp"
#include "huapadic/rng.hpp"

using namespace huapadic;

TEST(Rng, SplitMixReferenceValue) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, SameSeedSameStream) {
  RngStream a(123), b(123), c(124);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs = differs || x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SplitIgnoresParentPosition) {
  RngStream a(9), b(9);
  for (int i = 0; i < 17; ++i) b.next();
  RngStream ca = a.split(3), cb = b.split(3), cc = a.split(4);
  EXPECT_EQ(ca.next(), cb.next());
  EXPECT_NE(a.split(3).next(), cc.next());
}

TEST(Rng, UniformBelowIsInRangeAndCoversAll) {
  RngStream r(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto x = r.uniform_below(7);
    ASSERT_LT(x, 7u);
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rational, FractionIsCanonical) {
  EXPECT_EQ(fraction(4, 8), Rational(1) / 2);
  EXPECT_EQ(to_fraction_string(fraction(4, 8)), "1/2");
  EXPECT_EQ(to_fraction_string(fraction(-6, 3)), "-2/1");
  EXPECT_THROW(fraction(1, 0), std::invalid_argument);
}

TEST(Rational, PowersAndDecimals) {
  EXPECT_EQ(ppow(2, -3), fraction(1, 8));
  EXPECT_EQ(ppow(3, 4), Rational(81));
  EXPECT_EQ(rpow(fraction(2, 3), -2), fraction(9, 4));
  EXPECT_EQ(to_decimal_string(fraction(1, 3), 4), "0.3333");
  EXPECT_EQ(to_decimal_rounded(fraction(1, 3), 4, true), "0.3334");
  EXPECT_EQ(to_decimal_rounded(fraction(1, 3), 4, false), "0.3333");
  EXPECT_EQ(to_decimal_string(fraction(-1, 4), 2), "-0.25");
}

TEST(Rational, ParseIsExactOnly) {
  EXPECT_EQ(parse_rational("3/6"), fraction(1, 2));
  EXPECT_EQ(parse_rational("-7"), Rational(-7));
  EXPECT_EQ(parse_rational("+2/3"), fraction(2, 3));
  EXPECT_THROW(parse_rational("0.5"), std::invalid_argument);
  EXPECT_THROW(parse_rational("1e-3"), std::invalid_argument);
  EXPECT_THROW(parse_rational("1/0"), std::invalid_argument);
  EXPECT_THROW(parse_rational("x"), std::invalid_argument);
  EXPECT_THROW(parse_rational(""), std::invalid_argument);
}

TEST(LazyUniform, DecidesDyadicThresholdsExactly) {
  RngStream r(77);
  long below = 0;
  const long n = 20000;
  for (long i = 0; i < n; ++i) {
    LazyUniform u(r);
    const bool lt = u.less_than(fraction(1, 3));
    EXPECT_EQ(lt, u.upper() <= fraction(1, 3));
    below += lt ? 1 : 0;
  }
  // Binomial(20000, 1/3): sd about 67.
  EXPECT_NEAR(static_cast<double>(below), n / 3.0, 4 * 67.0);
}

TEST(LazyUniform, IntervalShrinksOnRefine) {
  RngStream r(1);
  LazyUniform u(r);
  const Rational w0 = u.upper() - u.lower();
  u.refine();
  EXPECT_EQ(u.upper() - u.lower(), w0 / ipow(2, 64));
  EXPECT_LE(u.lower(), u.upper());
}

TEST(Primes, Checks) {
  EXPECT_TRUE(is_prime(2));
  EXPECT_TRUE(is_prime(97));
  EXPECT_FALSE(is_prime(1));
  EXPECT_FALSE(is_prime(91));
  EXPECT_THROW(require_prime(4), std::invalid_argument);
}

TEST(PadicScalar, ValuationExamples) {
  EXPECT_EQ(PadicScalar::from_integer(2, 12, 10).valuation(), Valuation::finite(2));
  EXPECT_EQ(PadicScalar::from_rational(2, fraction(1, 2), 10).valuation(), Valuation::finite(-1));
  EXPECT_EQ(PadicScalar::exact_zero(3).valuation(), Valuation::infinite());
  EXPECT_EQ(PadicScalar::from_rational(3, fraction(5, 18), 6).valuation(), Valuation::finite(-2));
}

TEST(PadicScalar, MulAndAddExamples) {
  const auto two = PadicScalar::from_integer(2, 2, 10);
  const auto six = PadicScalar::from_integer(2, 6, 10);
  const auto prod = two * six;
  // 12 = 2^2 * 3
  EXPECT_EQ(prod.valuation(), Valuation::finite(2));
  EXPECT_EQ(prod.residue(), 3);

  const auto sum = PadicScalar::from_integer(2, 1, 10) + PadicScalar::from_integer(2, 3, 10);
  EXPECT_EQ(sum.valuation(), Valuation::finite(2));
  EXPECT_EQ(sum.residue(), 1);
  EXPECT_EQ(sum.representative(), Rational(4));
}

TEST(PadicScalar, CancellationIsNeverExactZero) {
  const auto x = PadicScalar::from_rational(5, fraction(7, 3), 8);
  const auto z = x - x;
  EXPECT_TRUE(z.is_zero());
  EXPECT_FALSE(z.is_exact_zero());
  EXPECT_EQ(z.valuation().kind, Valuation::Kind::below_precision);
  EXPECT_EQ(z.valuation().value, 8);
}

TEST(PadicScalar, ExactZeroIsNeutral) {
  const auto x = PadicScalar::from_integer(3, 10, 5);
  EXPECT_EQ(x + PadicScalar::exact_zero(3), x);
  EXPECT_TRUE((x * PadicScalar::exact_zero(3)).is_exact_zero());
}

TEST(PadicScalar, RepresentativeRoundTripsModuloPrecision) {
  const Rational r = fraction(22, 7);
  const auto x = PadicScalar::from_rational(2, r, 16);
  // x - r has valuation at least the absolute precision.
  Rational diff = x.representative() - r;
  Integer num = diff.get_num();
  EXPECT_GE(count_p_factors(num, 2), x.absolute_precision());
}

TEST(PadicScalar, DifferentPrimesRefused) {
  EXPECT_THROW(PadicScalar::from_integer(2, 1, 4) + PadicScalar::from_integer(3, 1, 4), std::invalid_argument);
}

TEST(PadicScalar, UltrametricInequalityOnRandomPairs) {
  RngStream rng(31);
  for (int i = 0; i < 500; ++i) {
    const auto x = PadicScalar::from_residue(3, uniform_residue(3, 12, rng), 12, static_cast<long>(rng.uniform_below(5)) - 2);
    const auto y = PadicScalar::from_residue(3, uniform_residue(3, 12, rng), 12, static_cast<long>(rng.uniform_below(5)) - 2);
    const auto s = x + y;
    const auto vx = x.valuation(), vy = y.valuation(), vs = s.valuation();
    if (!vx.is_finite() || !vy.is_finite()) continue;
    const long bound = std::min(vx.value, vy.value);
    EXPECT_GE(vs.value, bound);
    if (vx.value != vy.value) {
      EXPECT_EQ(vs, Valuation::finite(bound));
    }
  }
}

TEST(PadicScalar, MultiplicationAddsValuations) {
  RngStream rng(8);
  for (int i = 0; i < 300; ++i) {
    const auto x = sample_haar_zp(5, 10, rng);
    const auto y = sample_haar_zp(5, 10, rng);
    if (!x.valuation().is_finite() || !y.valuation().is_finite()) continue;
    EXPECT_EQ((x * y).valuation(), Valuation::finite(x.valuation().value + y.valuation().value));
  }
}

TEST(Haar, DeterministicGivenStream) {
  RngStream a(4), b(4);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_haar_zp(7, 30, a), sample_haar_zp(7, 30, b));
}

TEST(Haar, ShellFrequencies) {
  // P(v = j) = (1 - 1/p) p^{-j}.
  RngStream rng(2024);
  const long n = 40000;
  std::map<long, long> counts;
  for (long i = 0; i < n; ++i) {
    const auto v = sample_haar_zp(2, 20, rng).valuation();
    if (v.is_finite()) ++counts[v.value];
  }
  for (long j = 0; j < 4; ++j) {
    const double expect = 0.5 * std::pow(0.5, static_cast<double>(j));
    const double sd = std::sqrt(expect * (1 - expect) / n);
    EXPECT_NEAR(static_cast<double>(counts[j]) / n, expect, 4 * sd) << "shell " << j;
  }
}

TEST(Haar, ResidueDigitsUniformLargePrecision) {
  // Many digits exercise the chunked path; the top digit must be uniform too.
  RngStream rng(3);
  std::map<long, long> top;
  const long n = 9000;
  const Integer base = ipow(3, 39);
  for (long i = 0; i < n; ++i) {
    const Integer r = uniform_residue(3, 40, rng);
    ASSERT_LT(r, ipow(3, 40));
    ++top[static_cast<long>(Integer(r / base).get_si())];
  }
  for (long d = 0; d < 3; ++d) EXPECT_NEAR(static_cast<double>(top[d]) / n, 1.0 / 3, 4 * std::sqrt(2.0 / 9 / n));
}

TEST(PrecisionBudget, Validation) {
  EXPECT_NO_THROW((PrecisionBudget{24, 8}.validate()));
  EXPECT_THROW((PrecisionBudget{8, 8}.validate()), std::invalid_argument);
  EXPECT_THROW((PrecisionBudget{8, -1}.validate()), std::invalid_argument);
}

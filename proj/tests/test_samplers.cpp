#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "huapadic/samplers.hpp"

using namespace huapadic;

namespace {

void expect_frequency(long hits, long n, double prob, double sigmas, const std::string& what) {
  const double sd = std::sqrt(prob * (1 - prob) / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(n), prob, sigmas * sd) << what;
}

}  // namespace

TEST(KernelStep, AbsorbingZero) {
  HuaSampler s(HuaParams::make(2, 1));
  RngStream rng(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(s.kernel_step(0, true, rng), 0);
  EXPECT_THROW(s.kernel_step(-1, true, rng), std::invalid_argument);
}

TEST(KernelStep, HalfHalfRow) {
  HuaSampler s(HuaParams::make(2, 1));
  RngStream rng(2);
  const long n = 100000;
  long zeros = 0;
  for (long i = 0; i < n; ++i) zeros += s.kernel_step(1, true, rng) == 0 ? 1 : 0;
  expect_frequency(zeros, n, 0.5, 3, "P(1, 0)");
}

TEST(KernelStep, RowFrequenciesMatchExactRow) {
  const auto hp = HuaParams::make(3, fraction(1, 3));
  HuaSampler s(hp);
  HuaLaws laws(hp);
  RngStream rng(3);
  const long n = 30000;
  std::map<long, long> counts;
  for (long i = 0; i < n; ++i) ++counts[s.kernel_step(4, true, rng)];
  for (long y = 0; y <= 4; ++y) {
    expect_frequency(counts[y], n, laws.kernel(4, y).get_d(), 4, "y=" + std::to_string(y));
  }
}

TEST(ChainPath, PartitionReconstruction) {
  const ChainPath path{{2, 1, 0}};
  EXPECT_TRUE(path.absorbed());
  EXPECT_EQ(path.partition(), Partition::from_parts({2, 1}));
  EXPECT_EQ(path.partition().multiplicity(1), 1);
  EXPECT_EQ(path.partition().multiplicity(2), 1);
  EXPECT_EQ((ChainPath{{3, 3, 1, 0}}).partition(), Partition::from_parts({3, 2, 2}));
}

TEST(Chain, MonotoneAndAbsorbed) {
  HuaSampler s(HuaParams::make(2, fraction(1, 2)));
  RngStream rng(4);
  for (int i = 0; i < 2000; ++i) {
    const auto path = s.nu_path(rng);
    ASSERT_TRUE(path.absorbed());
    for (std::size_t j = 0; j + 1 < path.states.size(); ++j) ASSERT_GE(path.states[j], path.states[j + 1]);
  }
}

TEST(PiS, DrawsDoNotDependOnCacheState) {
  const auto hp = HuaParams::make(2, 1);
  HuaSampler warm(hp);
  RngStream scratch(77);
  for (int i = 0; i < 500; ++i) warm.pi_s_draw(scratch);
  const RngStream root(5);
  for (std::uint64_t i = 0; i < 200; ++i) {
    HuaSampler cold(hp);
    RngStream a = root.split(i), b = root.split(i);
    EXPECT_EQ(warm.pi_s_draw(a), cold.pi_s_draw(b));
    EXPECT_EQ(a.position(), b.position());
  }
}

TEST(PiS, Frequencies) {
  const auto hp = HuaParams::make(2, 1);
  HuaSampler s(hp);
  HuaLaws laws(hp);
  RngStream rng(6);
  const long n = 40000;
  std::map<long, long> counts;
  for (long i = 0; i < n; ++i) ++counts[s.pi_s_draw(rng)];
  const Rational eps = fraction(1, 1000000000);
  for (long x = 0; x <= 3; ++x) expect_frequency(counts[x], n, laws.pi_s(x, eps).approx(), 4, "x=" + std::to_string(x));
}

TEST(Nu, SmallPartitionFrequencies) {
  const auto hp = HuaParams::make(2, 1);
  HuaSampler s(hp);
  HuaLaws laws(hp);
  RngStream rng(7);
  const long n = 40000;
  std::map<std::string, long> counts;
  for (long i = 0; i < n; ++i) ++counts[s.nu(rng).label()];
  const Rational eps = fraction(1, 1000000000);
  for (const auto& parts : std::vector<std::vector<long>>{{}, {1}, {2}, {1, 1}, {2, 1}}) {
    const auto lam = Partition::from_parts(parts);
    expect_frequency(counts[lam.label()], n, laws.nu_s(lam, eps).approx(), 4, lam.label());
  }
}

TEST(HuaSingulars, OneByOneZeroClass) {
  HuaSampler s(HuaParams::make(2, 1));
  RngStream rng(8);
  const long n = 100000;
  long hits = 0;
  for (long i = 0; i < n; ++i) hits += s.hua_singulars(1, rng) == SingularTuple::exact({0}) ? 1 : 0;
  expect_frequency(hits, n, 1.0 / 3, 3, "k = (0)");
}

TEST(HuaSingulars, TwoByTwoFrequencies) {
  const auto hp = HuaParams::make(3, fraction(1, 3));
  HuaSampler s(hp);
  HuaLaws laws(hp);
  RngStream rng(9);
  const long n = 30000;
  std::map<std::string, long> counts;
  for (long i = 0; i < n; ++i) ++counts[s.hua_singulars(2, rng).label()];
  for (const auto& k : std::vector<std::vector<long>>{{0, 0}, {1, 0}, {0, -1}, {1, -1}, {-1, -1}}) {
    const auto kt = SingularTuple::exact(k);
    expect_frequency(counts[kt.label()], n, laws.m_N_direct(kt.parts).get_d(), 4, kt.label());
  }
}

TEST(HuaMatrix, SingularNumbersRoundTripExactly) {
  HuaSampler s(HuaParams::make(2, 1));
  const PrecisionBudget budget{24, 8};
  const RngStream root(10);
  for (std::uint64_t i = 0; i < 500; ++i) {
    RngStream a = root.split(i), b = root.split(i);
    const auto k = s.hua_singulars(3, a);
    const auto m = sample_hua_matrix(s, 3, budget, b);
    const auto got = singular_numbers(m);
    // The window keeps E digits below the top singular number.
    if (k.parts.back() > -budget.digits + budget.guard) {
      EXPECT_EQ(got, k);
    }
  }
}

TEST(HuaMatrix, Deterministic) {
  const auto hp = HuaParams::make(3, 1);
  RngStream a(11), b(11);
  EXPECT_EQ(sample_hua_matrix(hp, 2, {12, 3}, a), sample_hua_matrix(hp, 2, {12, 3}, b));
}

TEST(ErgodicMatrix, EmptyParameterIsHaar) {
  RngStream rng(12);
  const long n = 20000;
  long units = 0;
  for (long i = 0; i < n; ++i) {
    const auto m = sample_ergodic_matrix(Partition(), 2, 2, {16, 4}, rng);
    EXPECT_EQ(m.shift(), 0);
    units += m.entry(0, 1).valuation() == Valuation::finite(0) ? 1 : 0;
  }
  expect_frequency(units, n, 0.5, 4, "unit entries");
}

TEST(ErgodicMatrix, LargeCornersRecoverParameter) {
  const auto k = Partition::from_parts({2, 1});
  RngStream rng(13);
  const long n = 300;
  long hits = 0;
  for (long i = 0; i < n; ++i) {
    const auto m = sample_ergodic_matrix(k, 2, 16, {24, 8}, rng);
    const auto sing = singular_numbers(m);
    std::vector<long> pos;
    for (const long x : sing.parts) {
      if (x > 0) pos.push_back(x);
    }
    hits += Partition::from_parts(pos) == k ? 1 : 0;
  }
  EXPECT_GT(hits, n * 95 / 100);
}

TEST(ErgodicMatrix, CornerOfLargerSampleHasSameShift) {
  RngStream rng(14);
  const auto m = sample_ergodic_matrix(Partition::from_parts({3}), 3, 4, {12, 2}, rng);
  EXPECT_EQ(m.shift(), 3);
  EXPECT_EQ(m.digits(), 15);
  EXPECT_EQ(corner(m, 2).shift(), 3);
}

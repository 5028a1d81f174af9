#include <gtest/gtest.h>

#include "huapadic/experiments.hpp"

using namespace huapadic;

TEST(StableHash, Fnv1aReferenceValues) {
  EXPECT_EQ(stable_hash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Histogram, CountsAndFrequencies) {
  Histogram h;
  h.add("x", 3);
  h.add("y");
  Histogram g;
  g.add("x");
  h.merge(g);
  EXPECT_EQ(h.total, 5);
  EXPECT_EQ(h.count("x"), 4);
  EXPECT_EQ(h.count("z"), 0);
  EXPECT_EQ(h.frequency("x"), fraction(4, 5));
}

TEST(TvDistance, ProportionalHistogramLeavesOnlyTail) {
  ExactLaw law;
  law.mass["a"] = fraction(1, 2);
  law.mass["b"] = fraction(1, 4);
  law.deficit = fraction(1, 4);
  Histogram h;
  h.add("a", 2);
  h.add("b", 1);
  const auto tv = tv_distance(h, law);
  // Coarsened: (2/3 - 1/2) + (1/3 - 1/4) + (1/4 - 0) = 1/2, halved.
  EXPECT_EQ(tv.on_support.lower, fraction(1, 4));
  EXPECT_EQ(tv.on_support.upper, fraction(1, 4));
  EXPECT_EQ(tv.empirical_outside, 0);
  EXPECT_EQ(tv.full_upper, fraction(1, 4));

  Histogram exact;
  exact.add("a", 2);
  exact.add("b", 1);
  exact.add("c", 1);
  const auto tv2 = tv_distance(exact, law);
  EXPECT_EQ(tv2.on_support.upper, 0);
  EXPECT_EQ(tv2.full_upper, fraction(1, 4));
}

TEST(TvDistance, BracketedLawWidensInterval) {
  BracketLaw law;
  law.mass["a"] = {fraction(2, 5), fraction(3, 5), 0};
  law.deficit = {fraction(2, 5), fraction(3, 5), 0};
  Histogram h;
  h.add("a");
  const auto tv = tv_distance(h, law);
  EXPECT_EQ(tv.on_support.lower, fraction(2, 5));
  EXPECT_EQ(tv.on_support.upper, fraction(3, 5));
  EXPECT_THROW(tv_distance(Histogram{}, law), std::invalid_argument);
}

TEST(Statistics, SigmasAndThresholds) {
  const auto half = CertifiedValue::exact(fraction(1, 2));
  // sigma = 0.005 at n = 10^4.
  EXPECT_TRUE(within_sigmas(fraction(51, 100), half, 10000, 3));
  EXPECT_FALSE(within_sigmas(fraction(52, 100), half, 10000, 3));
  EXPECT_EQ(scaled_threshold(fraction(1, 100), 100000, 100000), fraction(1, 100));
  EXPECT_NEAR(scaled_threshold(fraction(1, 100), 100000, 1000).get_d(), 0.1, 1e-12);
}

TEST(ParallelFor, CoversEveryTaskOnce) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t t, unsigned) { hit[t] += 1; });
  for (const int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(3, 2, [](std::size_t t, unsigned) {
                 if (t == 1) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(MonteCarlo, IndependentOfWorkerCount) {
  const auto hp = HuaParams::make(2, 1);
  auto make = [&]() -> Drawer {
    auto s = std::make_shared<HuaSampler>(hp);
    return [s](RngStream& rng, std::vector<std::string>& out) { out[0] = s->nu(rng).label(); };
  };
  const RngStream root(3);
  const auto one = run_monte_carlo(4500, 1, root, 1, make);
  const auto four = run_monte_carlo(4500, 1, root, 4, make);
  EXPECT_EQ(one.channels[0].counts, four.channels[0].counts);
  EXPECT_EQ(one.channels[0].total, 4500);
}

TEST(Oracle, OneByOneCounts) {
  const auto h = enumerate_oracle(2, 1, 3);
  EXPECT_EQ(h.total, 8);
  EXPECT_EQ(h.count("(0)"), 4);
  EXPECT_EQ(h.count("(-1)"), 2);
  EXPECT_EQ(h.count("(-2)"), 1);
  EXPECT_EQ(h.count("(<=-3)"), 1);
}

TEST(Oracle, TwoByTwoOverF2CountsRanks) {
  // 6 invertible, (2^2 - 1)^2 = 9 of rank one, 1 zero matrix.
  const auto h = enumerate_oracle(2, 2, 1);
  EXPECT_EQ(h.total, 16);
  EXPECT_EQ(h.count("(0,0)"), 6);
  EXPECT_EQ(h.count("(0,<=-1)"), 9);
  EXPECT_EQ(h.count("(<=-1,<=-1)"), 1);
}

TEST(Oracle, GuardRefusesLargeEnumerations) {
  EXPECT_THROW(enumerate_oracle(2, 3, 3), std::invalid_argument);
  EXPECT_THROW(enumerate_oracle(3, 3, 2), std::invalid_argument);
}

TEST(Oracle, EqualityReportPasses) {
  const auto r = run_oracle_equality(3, 2, 2, 2);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.parameters["matrices"], 6561);
}

TEST(Report, JsonAndCsvShape) {
  ExperimentReport r;
  r.name = "demo";
  r.claim = "c";
  r.columns = {"a", "b"};
  r.rows = {{"1", "x\"y"}};
  r.gate("g", "0.1", "<", "0.2", true);
  r.runtime_seconds = 3.5;
  const auto j = r.to_json();
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["pass"], true);
  EXPECT_FALSE(j.contains("runtime_seconds"));
  EXPECT_EQ(r.to_csv(), "\"a\",\"b\"\n\"1\",\"x\"\"y\"\n");
  r.count_gate("errors", 2);
  EXPECT_FALSE(r.pass());
  EXPECT_FALSE(ExperimentReport{}.pass());
}

TEST(Suites, SmallRunsAreReproducibleAcrossWorkers) {
  VerifyOptions a, b;
  a.draws = b.draws = 2000;
  a.workers = 1;
  b.workers = 3;
  const auto ra = run_suite("corners", a);
  const auto rb = run_suite("corners", b);
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].to_json().dump(), rb[i].to_json().dump());
    EXPECT_EQ(ra[i].precision_errors, 0);
  }
}

TEST(Suites, SeedChangesSamples) {
  VerifyOptions a, b;
  a.draws = b.draws = 2000;
  b.seed = 7;
  EXPECT_NE(run_suite("corners", a)[0].to_json().dump(), run_suite("corners", b)[0].to_json().dump());
  EXPECT_THROW(run_suite("nope", a), std::invalid_argument);
}

TEST(Suites, ExactSuitesPass) {
  VerifyOptions opt;
  for (const auto& r : run_suite("oracle", opt)) EXPECT_TRUE(r.pass()) << r.name;
  for (const auto& r : run_suite("chains", opt)) {
    if (r.name != "sampler_checks") EXPECT_TRUE(r.pass()) << r.name;
  }
}

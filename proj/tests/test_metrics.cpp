#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace editopt;

namespace {

RunRecord record(double y0, double y1, double seconds = 0.0) {
  return {parse_smiles("C"), parse_smiles("C"), y0, y1, seconds};
}

RunSummary summary(double imp, double rate, double minutes) {
  RunSummary s;
  s.avg_imp = imp;
  s.suc_rate = rate;
  s.avg_time_minutes = minutes;
  s.n = 1;
  return s;
}

}  // namespace

TEST(Delta, Examples) {
  EXPECT_NEAR(delta(record(1.0, 3.0), 1), 2.0, 1e-9);
  EXPECT_NEAR(delta(record(1.0, 3.0), -1), -2.0, 1e-9);
  EXPECT_NEAR(delta(record(0.459, -3.682), -1), 4.141, 1e-9);
}

TEST(Delta, Antisymmetric) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 100; ++i) {
    const RunRecord r = record(u(rng), u(rng));
    EXPECT_EQ(delta(r, 1), -delta(r, -1));
  }
}

TEST(Summarize, Examples) {
  const std::vector<RunRecord> a{record(0, 1, 30), record(0, -0.5, 60), record(0, 2, 90)};
  const RunSummary s = summarize(a, 1);
  EXPECT_NEAR(s.avg_imp, 2.5 / 3.0, 1e-9);
  EXPECT_NEAR(s.avg_imp, 0.8333, 1e-4);
  EXPECT_NEAR(s.suc_rate, 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(s.avg_time_minutes, 1.0, 1e-9);
  EXPECT_EQ(s.n, 3u);
  const std::vector<RunRecord> zeros{record(1, 1), record(2, 2)};
  EXPECT_EQ(summarize(zeros, 1).suc_rate, 0.0);
  EXPECT_THROW(summarize(std::vector<RunRecord>{}, 1), EmptyBatch);
}

TEST(Summarize, MatchesIndependentRecomputation) {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<RunRecord> records;
  for (int i = 0; i < 50; ++i) records.push_back(record(u(rng), u(rng), std::abs(u(rng)) * 10));
  for (int dir : {1, -1}) {
    double imp = 0, wins = 0, secs = 0;
    for (const RunRecord& r : records) {
      const double d = dir == 1 ? r.y_result - r.y_start : r.y_start - r.y_result;
      imp += d;
      wins += d > 0 ? 1 : 0;
      secs += r.wall_seconds;
    }
    const RunSummary s = summarize(records, dir);
    EXPECT_NEAR(s.avg_imp, imp / 50, 1e-9);
    EXPECT_NEAR(s.suc_rate, wins / 50, 1e-9);
    EXPECT_NEAR(s.avg_time_minutes, secs / 50 / 60, 1e-9);
    auto shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const RunSummary t = summarize(shuffled, dir);
    EXPECT_NEAR(t.avg_imp, s.avg_imp, 1e-9);
    EXPECT_EQ(t.suc_rate, s.suc_rate);
  }
}

TEST(RankSum, Examples) {
  const auto dominance = rank_sum({{"A", summary(2, 0.9, 1)}, {"B", summary(1, 0.5, 2)}});
  EXPECT_EQ(dominance.at("A"), 1);
  EXPECT_EQ(dominance.at("B"), 2);
  const auto tie = rank_sum({{"A", summary(1, 0.5, 1)}, {"B", summary(1, 0.5, 1)}});
  EXPECT_EQ(tie.at("A"), 1);
  EXPECT_EQ(tie.at("B"), 1);
}

TEST(RankSum, MixedDominanceFixture) {
  // imp ranks A1 B2 C3, rate ranks B1 A2 C2 (tie), time ranks C1 B2 A3.
  // Sums: A 6, B 5, C 6 -> B 1, A 2, C 2.
  const auto r = rank_sum({{"A", summary(3, 0.6, 3)}, {"B", summary(2, 0.8, 2)}, {"C", summary(1, 0.6, 1)}});
  EXPECT_EQ(r.at("A"), 2);
  EXPECT_EQ(r.at("B"), 1);
  EXPECT_EQ(r.at("C"), 2);
}

TEST(RankSum, NameOrderIrrelevant) {
  const auto a = rank_sum({{"x", summary(1, 0.2, 3)}, {"y", summary(2, 0.1, 1)}, {"z", summary(0, 0.9, 2)}});
  const auto b = rank_sum({{"c", summary(1, 0.2, 3)}, {"b", summary(2, 0.1, 1)}, {"a", summary(0, 0.9, 2)}});
  EXPECT_EQ(a.at("x"), b.at("c"));
  EXPECT_EQ(a.at("y"), b.at("b"));
  EXPECT_EQ(a.at("z"), b.at("a"));
}

TEST(Tanimoto, Examples) {
  const Molecule c = parse_smiles("C"), n = parse_smiles("N");
  EXPECT_EQ(morgan_tanimoto(c, c), 1.0);
  EXPECT_LT(morgan_tanimoto(c, n), 1.0);
  EXPECT_EQ(morgan_tanimoto(c, n), morgan_tanimoto(n, c));
}

TEST(Tanimoto, MatchesEnvironmentStrings) {
  const Molecule a = parse_smiles("CCO"), b = parse_smiles("CCN");
  const double expected =
      oracle::string_tanimoto(oracle::environment_strings(a, 2), oracle::environment_strings(b, 2));
  EXPECT_NEAR(morgan_tanimoto(a, b), expected, 1e-12);
  std::mt19937_64 rng(109);
  for (int i = 0; i < 100; ++i) {
    const Molecule x = oracle::random_molecule(rng), y = oracle::random_molecule(rng);
    for (int radius : {0, 1, 2, 3}) {
      EXPECT_NEAR(morgan_tanimoto(x, y, radius),
                  oracle::string_tanimoto(oracle::environment_strings(x, radius), oracle::environment_strings(y, radius)),
                  1e-12);
    }
  }
}

TEST(Tanimoto, RelabelingInvariant) {
  std::mt19937_64 rng(113);
  for (int i = 0; i < 100; ++i) {
    const Molecule x = oracle::random_molecule(rng);
    const Molecule y = oracle::random_molecule(rng);
    EXPECT_EQ(morgan_tanimoto(x, oracle::permuted(x, rng)), 1.0);
    EXPECT_EQ(morgan_tanimoto(x, y), morgan_tanimoto(oracle::permuted(y, rng), x));
  }
}

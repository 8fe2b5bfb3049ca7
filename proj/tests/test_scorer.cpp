#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace editopt;

namespace {

const Candidate& find_candidate(const std::vector<Candidate>& cs, const EditAction& a) {
  for (const Candidate& c : cs)
    if (c.action == a) return c;
  throw std::runtime_error("candidate not found");
}

double score_one(const EditScorer& s, const Molecule& from, const Candidate& c) {
  return s.score_batch(from, std::span<const Candidate>(&c, 1)).at(0);
}

}  // namespace

TEST(Properties, Examples) {
  EXPECT_EQ(wiener_index(parse_smiles("CCC")), 4.0);
  EXPECT_NEAR(molecular_weight(parse_smiles("C")), 16.043, 1e-9);
  EXPECT_EQ(heavy_atom_count(parse_smiles("C1CCC1")), 4.0);
  EXPECT_EQ(ring_count_property(parse_smiles("C1CC2CCC12")), 2.0);
  EXPECT_EQ(polarity_proxy(parse_smiles("CCO")), 0.0);
  EXPECT_EQ(polarity_proxy(parse_smiles("NC(F)O")), 2.5);
}

TEST(Properties, Registry) {
  for (const char* name : {"heavy_atom_count", "molecular_weight", "ring_count", "wiener_index", "polarity_proxy"}) {
    EXPECT_EQ(find_property(name).name, name);
  }
  EXPECT_THROW(find_property("logp"), UnknownProperty);
}

TEST(Properties, DeterministicOnIsomorphs) {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 100; ++i) {
    const Molecule m = oracle::random_molecule(rng);
    const Molecule p = oracle::permuted(m, rng);
    for (const PropertyOracle& prop : builtin_properties()) EXPECT_NEAR(prop(m), prop(p), 1e-9) << prop.name;
  }
}

TEST(ExactScorer, Examples) {
  const Molecule cc = parse_smiles("CC");
  const auto cs = feasible_actions(cc);
  const auto heavy = exact_oracle_scorer(find_property("heavy_atom_count"));
  EXPECT_EQ(score_one(*heavy, cc, find_candidate(cs, EditAction::atom_add(0, Element::C))), 1.0);

  const Molecule chain = parse_smiles("CCCC");
  const auto rings = exact_oracle_scorer(find_property("ring_count"));
  const auto chain_cs = feasible_actions(chain);
  EXPECT_EQ(score_one(*rings, chain, find_candidate(chain_cs, EditAction::ring_form(0, 3))), 1.0);

  const auto weight = exact_oracle_scorer(find_property("molecular_weight"));
  const double d = score_one(*weight, cc, find_candidate(cs, EditAction::atom_replace(0, Element::O)));
  // CH3 -> OH: 15.999 + 1.008 - (12.011 + 3 * 1.008)
  EXPECT_NEAR(d, 15.999 - 12.011 - 2 * 1.008, 1e-9);
}

TEST(ExactScorer, MatchesDatasetDeltas) {
  std::mt19937_64 rng(67);
  oracle::RandomMoleculeOptions opt;
  opt.max_atoms = 6;
  std::vector<LabeledMolecule> set;
  for (int i = 0; i < 15; ++i) set.push_back({oracle::random_molecule(rng, opt), 0.0});
  const PropertyOracle& w = find_property("wiener_index");
  const auto scorer = exact_oracle_scorer(w);
  const Dataset data = build_dataset(set, w, 2, 1000);
  for (const EditResponseSample& s : data.samples) {
    Candidate c{s.edit, s.to, canonical_key(s.to)};
    EXPECT_NEAR(score_one(*scorer, s.from, c), s.delta, 1e-12);
  }
}

TEST(Scorers, BatchEqualsSerial) {
  std::mt19937_64 rng(71);
  const auto exact = exact_oracle_scorer(find_property("wiener_index"));
  const auto group = group_contribution_scorer(ContributionTable({{"AtomAdd", 1.5}, {"RingForm:N", -2.0}}));
  const auto noisy = noisy_scorer(exact, 0.5, 9);
  for (int i = 0; i < 20; ++i) {
    const Molecule m = oracle::random_molecule(rng);
    const auto cs = feasible_actions(m);
    for (const auto& scorer : {exact, group, noisy}) {
      const auto batch = scorer->score_batch(m, cs);
      ASSERT_EQ(batch.size(), cs.size());
      for (std::size_t k = 0; k < cs.size(); ++k) EXPECT_EQ(batch[k], score_one(*scorer, m, cs[k]));
    }
  }
}

TEST(GroupScorer, Examples) {
  const Molecule m = parse_smiles("CCO");
  const auto cs = feasible_actions(m);
  for (double v : group_contribution_scorer(ContributionTable())->score_batch(m, cs)) EXPECT_EQ(v, 0.0);

  const auto group = group_contribution_scorer(ContributionTable({{"AtomAdd", 1.0}}));
  const auto exact = exact_oracle_scorer(find_property("heavy_atom_count"));
  const auto g = group->score_batch(m, cs);
  const auto e = exact->score_batch(m, cs);
  for (std::size_t k = 0; k < cs.size(); ++k)
    if (cs[k].action.kind() == EditKind::AtomAdd) {
      EXPECT_EQ(g[k], e[k]);
    }
}

TEST(GroupScorer, RefinedKeysWin) {
  const ContributionTable t({{"AtomReplace", 1.0}, {"AtomReplace:N", 3.0}});
  EXPECT_EQ(t.lookup(EditKind::AtomReplace, Element::N), 3.0);
  EXPECT_EQ(t.lookup(EditKind::AtomReplace, Element::O), 1.0);
  EXPECT_EQ(t.lookup(EditKind::RingOpen, Element::O), 0.0);
  EXPECT_THROW(ContributionTable::from_json(nlohmann::json::parse(R"({"Bogus": 1})")), std::invalid_argument);
  EXPECT_THROW(ContributionTable::from_json(nlohmann::json::parse(R"({"AtomAdd:Xx": 1})")), std::invalid_argument);
  EXPECT_EQ(ContributionTable::from_json(t.to_json()).entries(), t.entries());
}

TEST(GroupScorer, FitReportsHoldoutError) {
  std::mt19937_64 rng(73);
  oracle::RandomMoleculeOptions opt;
  opt.max_atoms = 6;
  opt.stereo_rate = 0.0;
  std::vector<LabeledMolecule> set;
  for (int i = 0; i < 25; ++i) set.push_back({oracle::random_molecule(rng, opt), 0.0});
  const Dataset heavy = build_dataset(set, find_property("heavy_atom_count"), 2, 2000);
  const ContributionFit exact_fit = fit_group_contribution(heavy.samples, 0.25, 1);
  EXPECT_GT(exact_fit.holdout_size, 0u);
  // Heavy-atom count is exactly additive per op, so the fit is perfect.
  EXPECT_NEAR(exact_fit.holdout_mae, 0.0, 1e-12);

  const Dataset wiener = build_dataset(set, find_property("wiener_index"), 2, 2000);
  const ContributionFit fit = fit_group_contribution(wiener.samples, 0.25, 1);
  EXPECT_EQ(fit.train_size + fit.holdout_size, wiener.samples.size());
  EXPECT_GT(fit.holdout_mae, 0.0);
  // Recompute the held-out error independently.
  const GroupContributionScorer scorer(fit.table);
  double err = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < wiener.samples.size(); ++i) {
    const double u = static_cast<double>(hash_combine(1, i) >> 11) * 0x1.0p-53;
    if (u >= 0.25) continue;
    err += std::abs(scorer.score(wiener.samples[i].from, wiener.samples[i].edit) - wiener.samples[i].delta);
    ++n;
  }
  EXPECT_EQ(n, fit.holdout_size);
  EXPECT_NEAR(err / static_cast<double>(n), fit.holdout_mae, 1e-12);
}

TEST(NoisyScorer, ZeroSigmaAndDeterminism) {
  const Molecule m = parse_smiles("CC(C)CO");
  const auto cs = feasible_actions(m);
  const auto base = exact_oracle_scorer(find_property("wiener_index"));
  EXPECT_EQ(noisy_scorer(base, 0.0, 5)->score_batch(m, cs), base->score_batch(m, cs));
  EXPECT_EQ(noisy_scorer(base, 0.3, 5)->score_batch(m, cs), noisy_scorer(base, 0.3, 5)->score_batch(m, cs));
  EXPECT_NE(noisy_scorer(base, 0.3, 5)->score_batch(m, cs), noisy_scorer(base, 0.3, 6)->score_batch(m, cs));
  EXPECT_THROW(noisy_scorer(base, -1.0, 5), std::invalid_argument);
}

TEST(NoisyScorer, EmpiricalStd) {
  const auto zero = group_contribution_scorer(ContributionTable());
  std::vector<double> draws;
  std::mt19937_64 rng(79);
  for (std::uint64_t seed = 0; draws.size() < 10000; ++seed) {
    const Molecule m = oracle::random_molecule(rng);
    const auto cs = feasible_actions(m);
    for (double v : noisy_scorer(zero, 0.1, seed)->score_batch(m, cs)) draws.push_back(v);
  }
  draws.resize(10000);
  double mean = 0.0;
  for (double v : draws) mean += v;
  mean /= static_cast<double>(draws.size());
  double var = 0.0;
  for (double v : draws) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(draws.size() - 1));
  EXPECT_GE(sd, 0.09);
  EXPECT_LE(sd, 0.11);
  EXPECT_NEAR(mean, 0.0, 0.01);
}

TEST(NoisyScorer, ConvergesToBase) {
  const Molecule m = parse_smiles("CCN");
  const auto cs = feasible_actions(m);
  const auto base = exact_oracle_scorer(find_property("molecular_weight"));
  const auto exact = base->score_batch(m, cs);
  for (double sigma : {1e-3, 1e-6, 1e-9}) {
    const auto noisy = noisy_scorer(base, sigma, 3)->score_batch(m, cs);
    for (std::size_t k = 0; k < cs.size(); ++k) EXPECT_NEAR(noisy[k], exact[k], 10 * sigma);
  }
}

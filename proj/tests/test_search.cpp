#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace editopt;

namespace {

OptimizationTask task_for(const std::string& smiles, const std::string& property, int direction) {
  return {parse_smiles(smiles), property, direction, exact_oracle_scorer(find_property(property))};
}

// Scales every score of a base scorer.
class ScaledScorer final : public EditScorer {
 public:
  ScaledScorer(std::shared_ptr<const EditScorer> base, double k) : base_(std::move(base)), k_(k) {}
  std::string name() const override { return "scaled"; }
  std::vector<double> score_batch(const Molecule& from, std::span<const Candidate> cs) const override {
    auto out = base_->score_batch(from, cs);
    for (double& v : out) v *= k_;
    return out;
  }

 private:
  std::shared_ptr<const EditScorer> base_;
  double k_;
};

double true_utility(const SearchResult& r, const std::string& property, int direction) {
  const PropertyOracle& p = find_property(property);
  return direction * (p(r.trajectory.selected) - p(r.trajectory.start));
}

}  // namespace

TEST(Defaults, MatchReferenceConfiguration) {
  const SearchConfig cfg;
  EXPECT_EQ(cfg.num_simulations, 800);
  EXPECT_EQ(cfg.exploration_weight, 2.0);
  EXPECT_EQ(cfg.max_depth, 10);
  EXPECT_EQ(cfg.pruning_patience, 3);
  EXPECT_EQ(cfg.max_branching, 10);
  EXPECT_TRUE(cfg.use_prior);
  EXPECT_TRUE(cfg.use_leaf_value);
  EXPECT_EQ(cfg.expansion_ranking, ExpansionRanking::Scorer);
  EXPECT_EQ(cfg.strategy, Strategy::Mcts);
}

TEST(Formulas, Utility) {
  EXPECT_NEAR(utility(-2.54, -1), 2.54, 1e-9);
  EXPECT_EQ(utility(0.0, 1), 0.0);
  EXPECT_NEAR(utility(3.10, 1), 3.10, 1e-9);
}

TEST(Formulas, Softmax) {
  const std::vector<double> equal{0.7, 0.7};
  const auto p = softmax(equal);
  EXPECT_NEAR(p[0], 0.5, 1e-9);
  EXPECT_NEAR(p[1], 0.5, 1e-9);
  const std::vector<double> s{1.0, 0.0};
  const auto q = softmax(s);
  EXPECT_NEAR(q[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-9);
  EXPECT_NEAR(q[1], 1.0 / (std::exp(1.0) + 1.0), 1e-9);
  EXPECT_NEAR(q[0], 0.7311, 1e-4);
  const std::vector<double> big{1000.0, 999.0};
  EXPECT_NEAR(softmax(big)[0], q[0], 1e-12);
}

TEST(Formulas, Puct) {
  EXPECT_NEAR(puct_score(0.5, 0.2, 9, 2, 2.0), 0.9, 1e-9);
  EXPECT_NEAR(puct_score(0.0, 0.5, 1, 0, 2.0), 1.0, 1e-9);
}

TEST(SelectChild, GreedyWithoutExploration) {
  SearchTree tree(parse_smiles("C"));
  tree[0].status = NodeStatus::Expanded;
  tree[0].visits = 6;
  for (double w : {1.0, 3.0, 3.0}) {
    SearchNode child;
    child.visits = 2;
    child.total_value = w;
    child.prior = w == 1.0 ? 0.9 : 0.05;
    tree.nodes.push_back(child);
    tree[0].children.push_back(tree.size() - 1);
  }
  EXPECT_EQ(select_child(tree, 0, 0.0), 2);  // tie between 2 and 3
  EXPECT_EQ(select_child(tree, 0, 10.0), 1);
  for (int c : tree[0].children) tree[c].exhausted = true;
  EXPECT_THROW(select_child(tree, 0, 1.0), NoViableChild);
}

TEST(Backup, Examples) {
  SearchTree tree(parse_smiles("C"));
  const std::vector<int> path{0};
  backup(tree, path, 2.0);
  EXPECT_EQ(tree[0].visits, 1);
  EXPECT_EQ(tree[0].total_value, 2.0);
  EXPECT_EQ(tree[0].q(), 2.0);
  tree[0].visits = 3;
  tree[0].total_value = 3.0;
  backup(tree, path, 1.0);
  EXPECT_EQ(tree[0].visits, 4);
  EXPECT_EQ(tree[0].total_value, 4.0);
  EXPECT_EQ(tree[0].q(), 1.0);
}

TEST(Backup, ShadowAccumulator) {
  SearchTree tree(parse_smiles("C"));
  for (int i = 1; i <= 3; ++i) {
    tree.nodes.emplace_back();
    tree[i].parent = i - 1;
  }
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> value(-3.0, 3.0);
  std::vector<double> shadow(4, 0.0);
  std::vector<int> count(4, 0);
  for (int k = 0; k < 100; ++k) {
    const int leaf = static_cast<int>(rng() % 4);
    std::vector<int> path;
    for (int i = 0; i <= leaf; ++i) path.push_back(i);
    const double v = value(rng);
    backup(tree, path, v);
    for (int i : path) {
      shadow[static_cast<std::size_t>(i)] += v;
      ++count[static_cast<std::size_t>(i)];
    }
  }
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(tree[i].total_value, shadow[static_cast<std::size_t>(i)], 1e-9);
    EXPECT_EQ(tree[i].visits, count[static_cast<std::size_t>(i)]);
  }
}

TEST(Expand, PriorsSumToOne) {
  SearchConfig cfg;
  const auto scorer = exact_oracle_scorer(find_property("wiener_index"));
  SearchTree tree(parse_smiles("CCO"));
  ExpandContext ctx{*scorer, cfg, 1, SplitMix64(1), nullptr, true};
  const auto children = expand(tree, 0, ctx);
  ASSERT_EQ(children.size(), 10u);
  double total = 0.0;
  for (int c : children) total += tree[c].prior;
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_THROW(expand(tree, 0, ctx), std::logic_error);
}

TEST(Expand, TopKKeepsHighestSignedScores) {
  SearchConfig cfg;
  cfg.max_branching = 5;
  const auto scorer = exact_oracle_scorer(find_property("wiener_index"));
  const Molecule m = parse_smiles("CC(C)CO");
  SearchTree tree(m);
  ExpandContext ctx{*scorer, cfg, -1, SplitMix64(1), nullptr, true};
  const auto kids = expand(tree, 0, ctx);
  const auto all = scorer->score_batch(m, feasible_actions(m));
  std::vector<double> sorted;
  for (double v : all) sorted.push_back(-v);
  std::sort(sorted.rbegin(), sorted.rend());
  std::vector<double> kept;
  for (int c : kids) kept.push_back(-tree[c].edge_response);
  std::sort(kept.rbegin(), kept.rend());
  sorted.resize(5);
  EXPECT_EQ(kept, sorted);
}

TEST(Expand, ScaleInvariantRetention) {
  std::mt19937_64 rng(89);
  const auto base = exact_oracle_scorer(find_property("wiener_index"));
  const auto scaled = std::make_shared<ScaledScorer>(base, 3.7);
  SearchConfig cfg;
  for (int i = 0; i < 20; ++i) {
    const Molecule m = oracle::random_molecule(rng);
    SearchTree a(m), b(m);
    ExpandContext ca{*base, cfg, 1, SplitMix64(0), nullptr, true};
    ExpandContext cb{*scaled, cfg, 1, SplitMix64(0), nullptr, true};
    const auto ka = expand(a, 0, ca);
    const auto kb = expand(b, 0, cb);
    ASSERT_EQ(ka.size(), kb.size());
    for (std::size_t k = 0; k < ka.size(); ++k) EXPECT_EQ(a[ka[k]].inbound, b[kb[k]].inbound);
  }
}

TEST(Expand, UniformPriorsWhenDisabled) {
  SearchConfig cfg;
  cfg.use_prior = false;
  const auto scorer = exact_oracle_scorer(find_property("wiener_index"));
  SearchTree tree(parse_smiles("CCN"));
  ExpandContext ctx{*scorer, cfg, 1, SplitMix64(0), nullptr, true};
  for (int c : expand(tree, 0, ctx)) EXPECT_NEAR(tree[c].prior, 0.1, 1e-12);
}

TEST(RunSearch, CcoTwoAtomAdds) {
  SearchConfig cfg;
  cfg.max_depth = 2;
  const auto r = run_search(task_for("CCO", "heavy_atom_count", 1), cfg);
  EXPECT_EQ(r.trajectory.predicted_total, 2.0);
  EXPECT_EQ(oracle::exhaustive_optimum(parse_smiles("CCO"), heavy_atom_count, 1, 2), 2.0);
  ASSERT_EQ(r.trajectory.steps.size(), 2u);
  for (const auto& s : r.trajectory.steps) EXPECT_EQ(s.edit.kind(), EditKind::AtomAdd);
}

TEST(RunSearch, CannotShrinkMolecules) {
  SearchConfig cfg;
  cfg.max_depth = 3;
  const auto r = run_search(task_for("CCO", "heavy_atom_count", -1), cfg);
  EXPECT_EQ(r.trajectory.predicted_total, 0.0);
  EXPECT_TRUE(r.trajectory.steps.empty());
  EXPECT_TRUE(r.stats.no_improvement);
  EXPECT_EQ(canonical_key(r.trajectory.selected), canonical_key(parse_smiles("CCO")));
}

TEST(RunSearch, RingCountFromMethane) {
  SearchConfig cfg;
  cfg.max_depth = 4;
  cfg.pruning_patience = 5;
  cfg.max_branching = 1000;
  cfg.num_simulations = 200000;
  const auto r = run_search(task_for("C", "ring_count", 1), cfg);
  EXPECT_EQ(r.trajectory.predicted_total, oracle::exhaustive_optimum(parse_smiles("C"), ring_count_property, 1, 4));
}

TEST(RunSearch, TreeInvariants) {
  std::mt19937_64 rng(97);
  oracle::RandomMoleculeOptions opt;
  opt.max_atoms = 6;
  for (int i = 0; i < 6; ++i) {
    SearchConfig cfg;
    cfg.num_simulations = 150;
    cfg.seed = static_cast<std::uint64_t>(i);
    cfg.expansion_ranking = i % 2 ? ExpansionRanking::Random : ExpansionRanking::Scorer;
    const OptimizationTask task{oracle::random_molecule(rng, opt), "wiener_index", i % 3 ? 1 : -1,
                                noisy_scorer(exact_oracle_scorer(find_property("wiener_index")), 0.3, 5)};
    SearchTree tree(Molecule{});
    const auto r = run_search(task, cfg, &tree);
    EXPECT_EQ(tree[0].visits, r.stats.simulations);
    for (int n = 0; n < tree.size(); ++n) {
      const SearchNode& node = tree[n];
      EXPECT_TRUE(check_validity(node.molecule));
      EXPECT_LE(node.depth, cfg.max_depth);
      double g = 0.0;
      for (int k = n; k > 0; k = tree[k].parent) g += tree[k].edge_response;
      EXPECT_NEAR(node.path_response, g, 1e-9);
      if (node.status == NodeStatus::Expanded) {
        double priors = 0.0;
        int child_visits = 0;
        for (int c : node.children) {
          priors += tree[c].prior;
          child_visits += tree[c].visits;
        }
        EXPECT_NEAR(priors, 1.0, 1e-9);
        // One visit ends here (the expansion), the rest pass through to children.
        EXPECT_EQ(node.visits, 1 + child_visits);
      } else {
        EXPECT_TRUE(node.children.empty());
      }
    }
    // Replaying the trajectory reproduces the selection.
    Molecule m = task.start;
    double total = 0.0;
    for (const auto& s : r.trajectory.steps) {
      m = apply(m, s.edit);
      total += s.delta_hat;
    }
    EXPECT_EQ(canonical_key(m), canonical_key(r.trajectory.selected));
    EXPECT_NEAR(total, r.trajectory.predicted_total, 1e-9);
  }
}

TEST(RunSearch, Deterministic) {
  SearchConfig cfg;
  cfg.num_simulations = 120;
  cfg.expansion_ranking = ExpansionRanking::Random;
  cfg.seed = 17;
  OptimizationTask task{parse_smiles("CC(N)C=O"), "wiener_index", 1,
                        noisy_scorer(exact_oracle_scorer(find_property("wiener_index")), 0.3, 2)};
  EXPECT_EQ(to_json(run_search(task, cfg)).dump(), to_json(run_search(task, cfg)).dump());
  EXPECT_EQ(to_json(run_bfs(task, cfg)).dump(), to_json(run_bfs(task, cfg)).dump());
}

TEST(RunSearch, StagnationPrunes) {
  SearchConfig cfg;
  cfg.pruning_patience = 1;
  cfg.num_simulations = 50;
  // Under decrease of heavy atoms no edit helps, so every child is pruned at once.
  const auto r = run_search(task_for("CCO", "heavy_atom_count", -1), cfg);
  EXPECT_EQ(r.stats.nodes_expanded, 1);
  EXPECT_EQ(r.stats.simulations, 1);
}

TEST(RunBfs, DepthOneMatchesMcts) {
  std::mt19937_64 rng(101);
  oracle::RandomMoleculeOptions opt;
  opt.max_atoms = 6;
  for (int i = 0; i < 10; ++i) {
    SearchConfig cfg;
    cfg.max_depth = 1;
    const OptimizationTask task{oracle::random_molecule(rng, opt), "wiener_index", 1,
                                exact_oracle_scorer(find_property("wiener_index"))};
    EXPECT_EQ(canonical_key(run_bfs(task, cfg).trajectory.selected),
              canonical_key(run_search(task, cfg).trajectory.selected));
  }
}

TEST(RunBfs, GreedyOptimalOnAdditiveProperty) {
  for (const char* s : {"C", "CO", "CCN", "C1CC1", "OC=O"}) {
    for (int depth = 1; depth <= 2; ++depth) {
      SearchConfig cfg;
      cfg.max_depth = depth;
      const auto r = run_bfs(task_for(s, "heavy_atom_count", 1), cfg);
      EXPECT_EQ(r.trajectory.predicted_total,
                oracle::exhaustive_optimum(parse_smiles(s), heavy_atom_count, 1, depth))
          << s;
    }
  }
}

TEST(SelectChild, TerminalNodeHasNoChild) {
  SearchTree tree(parse_smiles("C"));
  tree[0].status = NodeStatus::Terminal;
  EXPECT_THROW(select_child(tree, 0, 1.0), NoViableChild);
}

TEST(Trajectory, JsonReplaysFromText) {
  SearchConfig cfg;
  cfg.num_simulations = 100;
  const OptimizationTask task{parse_smiles("C(C)(O)C=C"), "wiener_index", 1,
                              exact_oracle_scorer(find_property("wiener_index"))};
  const auto r = run_search(task, cfg);
  const auto j = to_json(r);
  Molecule m = parse_smiles(j["start"].get<std::string>());
  ASSERT_FALSE(j["steps"].empty());
  for (const auto& step : j["steps"]) {
    m = apply(m, edit_from_json(step["edit"]));
    EXPECT_EQ(canonical_key(m), canonical_key(parse_smiles(step["smiles"].get<std::string>())));
    m = parse_smiles(step["smiles"].get<std::string>());
  }
  EXPECT_EQ(canonical_key(m), canonical_key(parse_smiles(j["selected"].get<std::string>())));
  EXPECT_GT(true_utility(r, "wiener_index", 1), 0.0);
}

TEST(Config, Validation) {
  SearchConfig cfg;
  cfg.exploration_weight = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SearchConfig();
  cfg.max_branching = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  auto task = task_for("C", "heavy_atom_count", 1);
  task.direction = 0;
  EXPECT_THROW(run_search(task, SearchConfig()), std::invalid_argument);
}

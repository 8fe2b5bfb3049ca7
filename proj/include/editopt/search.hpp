#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "editopt/edits.hpp"
#include "editopt/rng.hpp"
#include "editopt/scorer.hpp"
#include "editopt/smiles.hpp"

namespace editopt {

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoViableChild : public SearchError {
 public:
  NoViableChild() : SearchError("no selectable child: every child is pruned or exhausted") {}
};

enum class ExpansionRanking { Scorer, Random };
enum class Strategy { Mcts, Bfs };

struct SearchConfig {
  static constexpr int kDefaultSimulations = 800;
  static constexpr double kDefaultExplorationWeight = 2.0;
  static constexpr int kDefaultMaxDepth = 10;
  static constexpr int kDefaultPruningPatience = 3;
  static constexpr int kDefaultMaxBranching = 10;

  int num_simulations = kDefaultSimulations;
  double exploration_weight = kDefaultExplorationWeight;
  int max_depth = kDefaultMaxDepth;
  int pruning_patience = kDefaultPruningPatience;
  int max_branching = kDefaultMaxBranching;
  std::uint64_t seed = 0;
  bool use_prior = true;
  bool use_leaf_value = true;
  ExpansionRanking expansion_ranking = ExpansionRanking::Scorer;
  Strategy strategy = Strategy::Mcts;

  void validate() const {
    if (num_simulations < 1) throw std::invalid_argument("num_simulations must be at least 1");
    if (!(exploration_weight > 0.0)) throw std::invalid_argument("exploration_weight must be positive");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
    if (pruning_patience < 1) throw std::invalid_argument("pruning_patience must be at least 1");
    if (max_branching < 1) throw std::invalid_argument("max_branching must be at least 1");
  }
};

struct OptimizationTask {
  Molecule start;
  std::string property;
  // +1 to increase the property, -1 to decrease it.
  int direction = 1;
  std::shared_ptr<const EditScorer> scorer;

  void validate() const {
    if (direction != 1 && direction != -1) throw std::invalid_argument("direction must be +1 or -1");
    if (!scorer) throw std::invalid_argument("task has no scorer");
    if (!check_validity(start)) throw std::invalid_argument("start molecule is not valid");
  }
};

enum class NodeStatus { Unexpanded, Expanded, Terminal, Pruned };

struct SearchNode {
  Molecule molecule;
  int depth = 0;
  // G: predicted response accumulated from the root.
  double path_response = 0.0;
  // Predicted response of the inbound edit.
  double edge_response = 0.0;
  int visits = 0;
  double total_value = 0.0;
  double prior = 1.0;
  std::optional<EditAction> inbound;
  int parent = -1;
  std::vector<int> children;
  NodeStatus status = NodeStatus::Unexpanded;
  int stagnation = 0;
  // Nothing below this node is left to visit.
  bool exhausted = false;

  double q() const { return visits > 0 ? total_value / visits : 0.0; }
};

struct SearchTree {
  std::vector<SearchNode> nodes;

  explicit SearchTree(Molecule root) {
    nodes.emplace_back();
    nodes.back().molecule = std::move(root);
  }
  SearchNode& operator[](int i) { return nodes[static_cast<std::size_t>(i)]; }
  const SearchNode& operator[](int i) const { return nodes[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(nodes.size()); }
};

struct RunStats {
  int simulations = 0;
  int nodes_expanded = 0;
  int nodes_generated = 0;
  int scorer_calls = 0;
  double wall_seconds = 0.0;
  bool degenerate_start = false;
  bool no_improvement = false;
};

struct TrajectoryStep {
  EditAction edit;
  Molecule molecule;
  double delta_hat = 0.0;
};

struct Trajectory {
  Molecule start;
  std::vector<TrajectoryStep> steps;
  double predicted_total = 0.0;
  Molecule selected;
};

struct SearchResult {
  Trajectory trajectory;
  RunStats stats;
};

inline double utility(double g, int direction) { return direction * g; }

// Max-subtracted softmax.
inline std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  const double top = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += out[i] = std::exp(x[i] - top);
  for (double& v : out) v /= sum;
  return out;
}

inline double puct_score(double q, double prior, int parent_visits, int child_visits, double c) {
  return q + c * prior * std::sqrt(static_cast<double>(parent_visits)) / (1.0 + child_visits);
}

struct ExpandContext {
  const EditScorer& scorer;
  const SearchConfig& cfg;
  int direction = 1;
  SplitMix64 rng;
  RunStats* stats = nullptr;
  bool stagnation_pruning = true;
};

// Expands an unexpanded node: scores every feasible edit, keeps the top K by
// signed path utility (or K at random), and attaches children with softmax
// priors. A node without feasible edits becomes terminal. Returns the new
// child indices.
inline std::vector<int> expand(SearchTree& tree, int index, ExpandContext& ctx) {
  if (tree[index].status != NodeStatus::Unexpanded) throw std::logic_error("expand: node is not unexpanded");
  if (tree[index].depth >= ctx.cfg.max_depth) throw std::logic_error("expand: node is at the depth limit");
  const std::vector<Candidate> candidates = feasible_actions(tree[index].molecule);
  if (candidates.empty()) {
    tree[index].status = NodeStatus::Terminal;
    tree[index].exhausted = true;
    if (ctx.stats) ++ctx.stats->nodes_expanded;
    return {};
  }
  const std::vector<double> scores = ctx.scorer.score_batch(tree[index].molecule, candidates);
  if (ctx.stats) {
    ++ctx.stats->nodes_expanded;
    ++ctx.stats->scorer_calls;
  }
  if (scores.size() != candidates.size()) throw SearchError("scorer returned the wrong number of scores");

  const double g = tree[index].path_response;
  std::vector<double> s(candidates.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = utility(g + scores[i], ctx.direction);

  const std::size_t k = std::min(candidates.size(), static_cast<std::size_t>(ctx.cfg.max_branching));
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (ctx.cfg.expansion_ranking == ExpansionRanking::Scorer) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(ctx.rng.below(order.size() - i));
      std::swap(order[i], order[j]);
    }
  }
  order.resize(k);
  std::sort(order.begin(), order.end());

  std::vector<double> kept;
  for (std::size_t i : order) kept.push_back(s[i]);
  std::vector<double> priors = ctx.cfg.use_prior ? softmax(kept) : std::vector<double>(k, 1.0 / static_cast<double>(k));

  const int depth = tree[index].depth + 1;
  const int parent_stagnation = tree[index].stagnation;
  std::vector<int> children;
  bool all_closed = true;
  for (std::size_t r = 0; r < k; ++r) {
    const Candidate& c = candidates[order[r]];
    SearchNode child;
    child.molecule = c.result;
    child.depth = depth;
    child.edge_response = scores[order[r]];
    child.path_response = g + child.edge_response;
    child.prior = priors[r];
    child.inbound = c.action;
    child.parent = index;
    child.stagnation = utility(child.edge_response, ctx.direction) > 0.0 ? 0 : parent_stagnation + 1;
    const bool stagnant = ctx.stagnation_pruning && child.stagnation >= ctx.cfg.pruning_patience;
    if (depth >= ctx.cfg.max_depth || stagnant) {
      child.status = NodeStatus::Pruned;
      child.exhausted = true;
    }
    all_closed = all_closed && child.exhausted;
    tree.nodes.push_back(std::move(child));
    children.push_back(tree.size() - 1);
  }
  if (ctx.stats) ctx.stats->nodes_generated += static_cast<int>(k);
  tree[index].children = children;
  tree[index].status = NodeStatus::Expanded;
  tree[index].exhausted = all_closed;
  return children;
}

// PUCT argmax over selectable children; ties go to the lowest child index.
inline int select_child(const SearchTree& tree, int index, double c) {
  const SearchNode& node = tree[index];
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int child : node.children) {
    const SearchNode& n = tree[child];
    if (n.exhausted) continue;
    const double score = puct_score(n.q(), n.prior, node.visits, n.visits, c);
    if (best < 0 || score > best_score) {
      best = child;
      best_score = score;
    }
  }
  if (best < 0) throw NoViableChild();
  return best;
}

inline void backup(SearchTree& tree, std::span<const int> path, double value) {
  for (int i : path) {
    ++tree[i].visits;
    tree[i].total_value += value;
  }
}

// Signed path utility of the leaf, or only its inbound step when leaf values
// are disabled.
inline double leaf_value(const SearchTree& tree, int leaf, const SearchConfig& cfg, int direction) {
  const SearchNode& n = tree[leaf];
  return utility(cfg.use_leaf_value ? n.path_response : n.edge_response, direction);
}

inline void update_exhaustion(SearchTree& tree, std::span<const int> path) {
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    SearchNode& n = tree[*it];
    if (n.status != NodeStatus::Expanded) continue;
    n.exhausted = std::all_of(n.children.begin(), n.children.end(), [&](int c) { return tree[c].exhausted; });
  }
}

// One select / expand / evaluate / backup pass. Returns the root-to-leaf path.
inline std::vector<int> simulate(SearchTree& tree, ExpandContext& ctx) {
  std::vector<int> path{0};
  int node = 0;
  while (tree[node].status == NodeStatus::Expanded) {
    node = select_child(tree, node, ctx.cfg.exploration_weight);
    path.push_back(node);
  }
  if (tree[node].status == NodeStatus::Unexpanded) expand(tree, node, ctx);
  backup(tree, path, leaf_value(tree, node, ctx.cfg, ctx.direction));
  update_exhaustion(tree, path);
  if (ctx.stats) ++ctx.stats->simulations;
  return path;
}

namespace detail {

inline SearchResult finish(const SearchTree& tree, const OptimizationTask& task, RunStats stats,
                           std::chrono::steady_clock::time_point started) {
  int best = -1;
  double best_utility = 0.0;
  for (int i = 1; i < tree.size(); ++i) {
    const double u = utility(tree[i].path_response, task.direction);
    if (best < 0 || u > best_utility) {
      best = i;
      best_utility = u;
    }
  }
  stats.degenerate_start = tree[0].status == NodeStatus::Terminal;
  if (best < 0 || best_utility <= 0.0) {
    best = 0;
    stats.no_improvement = !stats.degenerate_start;
  }
  SearchResult result;
  result.trajectory.start = task.start;
  result.trajectory.selected = tree[best].molecule;
  result.trajectory.predicted_total = tree[best].path_response;
  for (int i = best; i > 0; i = tree[i].parent) {
    result.trajectory.steps.push_back({*tree[i].inbound, tree[i].molecule, tree[i].edge_response});
  }
  std::reverse(result.trajectory.steps.begin(), result.trajectory.steps.end());
  stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.stats = stats;
  return result;
}

}  // namespace detail

// PUCT-guided tree search. Stops after cfg.num_simulations passes or once the
// whole tree is exhausted. The result is the generated node with the highest
// signed path response, or the start when no node improves on it.
inline SearchResult run_search(const OptimizationTask& task, const SearchConfig& cfg, SearchTree* tree_out = nullptr) {
  task.validate();
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  SearchTree tree(task.start);
  RunStats stats;
  ExpandContext ctx{*task.scorer, cfg, task.direction, SplitMix64(cfg.seed), &stats, true};
  for (int sim = 0; sim < cfg.num_simulations && !tree[0].exhausted; ++sim) simulate(tree, ctx);
  SearchResult result = detail::finish(tree, task, stats, started);
  if (tree_out) *tree_out = std::move(tree);
  return result;
}

// Level-by-level baseline: expand every frontier node, keep the K best new
// nodes by signed path response as the next frontier. cfg.num_simulations
// caps the number of node expansions.
inline SearchResult run_bfs(const OptimizationTask& task, const SearchConfig& cfg, SearchTree* tree_out = nullptr) {
  task.validate();
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  SearchTree tree(task.start);
  RunStats stats;
  ExpandContext ctx{*task.scorer, cfg, task.direction, SplitMix64(cfg.seed), &stats, false};
  std::vector<int> frontier{0};
  for (int depth = 0; depth < cfg.max_depth && !frontier.empty(); ++depth) {
    std::vector<int> next;
    for (int node : frontier) {
      if (stats.nodes_expanded >= cfg.num_simulations) break;
      for (int child : expand(tree, node, ctx)) next.push_back(child);
    }
    std::stable_sort(next.begin(), next.end(), [&](int a, int b) {
      return utility(tree[a].path_response, task.direction) > utility(tree[b].path_response, task.direction);
    });
    if (next.size() > static_cast<std::size_t>(cfg.max_branching)) next.resize(static_cast<std::size_t>(cfg.max_branching));
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
    if (stats.nodes_expanded >= cfg.num_simulations) break;
  }
  SearchResult result = detail::finish(tree, task, stats, started);
  if (tree_out) *tree_out = std::move(tree);
  return result;
}

inline SearchResult optimize(const OptimizationTask& task, const SearchConfig& cfg) {
  return cfg.strategy == Strategy::Bfs ? run_bfs(task, cfg) : run_search(task, cfg);
}

// {start, selected, predicted_total, steps: [{edit, smiles, delta_hat}],
// stats}. Each step's edit sites index the atoms of the previous SMILES in
// text order. Wall time is left out so identical runs serialize identically.
inline nlohmann::json to_json(const SearchResult& r) {
  const Trajectory& t = r.trajectory;
  WrittenSmiles previous = write_smiles_ordered(t.start);
  nlohmann::json out;
  out["start"] = previous.text;
  out["selected"] = write_smiles(t.selected);
  out["predicted_total"] = t.predicted_total;
  nlohmann::json steps = nlohmann::json::array();
  for (const TrajectoryStep& step : t.steps) {
    WrittenSmiles current = write_smiles_ordered(step.molecule);
    steps.push_back({{"edit", to_json(edit_in_text_order(step.edit, previous))},
                     {"smiles", current.text},
                     {"delta_hat", step.delta_hat}});
    previous = std::move(current);
  }
  out["steps"] = std::move(steps);
  out["stats"] = {{"simulations", r.stats.simulations},
                  {"nodes_expanded", r.stats.nodes_expanded},
                  {"nodes_generated", r.stats.nodes_generated},
                  {"scorer_calls", r.stats.scorer_calls},
                  {"degenerate_start", r.stats.degenerate_start},
                  {"no_improvement", r.stats.no_improvement}};
  return out;
}

}  // namespace editopt

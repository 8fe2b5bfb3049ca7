#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "editopt/molecule.hpp"
#include "editopt/rng.hpp"

namespace editopt {

class EmptyBatch : public std::invalid_argument {
 public:
  EmptyBatch() : std::invalid_argument("cannot summarize an empty batch of runs") {}
};

struct RunRecord {
  Molecule start;
  Molecule result;
  double y_start = 0.0;
  double y_result = 0.0;
  double wall_seconds = 0.0;
};

struct RunSummary {
  double avg_imp = 0.0;
  double suc_rate = 0.0;
  double avg_time_minutes = 0.0;
  // Mean true property of the selected molecules.
  double opt_mean = 0.0;
  std::size_t n = 0;
};

inline double delta(const RunRecord& r, int direction) {
  return direction >= 0 ? r.y_result - r.y_start : r.y_start - r.y_result;
}

inline RunSummary summarize(std::span<const RunRecord> records, int direction) {
  if (records.empty()) throw EmptyBatch();
  RunSummary s;
  s.n = records.size();
  std::size_t wins = 0;
  double imp = 0.0, seconds = 0.0, opt = 0.0;
  for (const RunRecord& r : records) {
    const double d = delta(r, direction);
    imp += d;
    wins += d > 0.0;
    seconds += r.wall_seconds;
    opt += r.y_result;
  }
  const double n = static_cast<double>(s.n);
  s.avg_imp = imp / n;
  s.suc_rate = static_cast<double>(wins) / n;
  s.avg_time_minutes = seconds / n / 60.0;
  s.opt_mean = opt / n;
  return s;
}

namespace detail {

// Competition ranks ("1224"): equal values share the smallest rank.
inline std::vector<int> competition_ranks(const std::vector<double>& values, bool higher_is_better) {
  std::vector<int> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    int better = 0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (higher_is_better ? values[j] > values[i] : values[j] < values[i]) ++better;
    }
    ranks[i] = better + 1;
  }
  return ranks;
}

}  // namespace detail

// Per-metric competition ranks (avg_imp and suc_rate high is better, time low
// is better), summed and ranked again ascending.
inline std::map<std::string, int> rank_sum(const std::map<std::string, RunSummary>& configs) {
  std::vector<double> imp, rate, time;
  for (const auto& [name, s] : configs) {
    imp.push_back(s.avg_imp);
    rate.push_back(s.suc_rate);
    time.push_back(s.avg_time_minutes);
  }
  const auto r1 = detail::competition_ranks(imp, true);
  const auto r2 = detail::competition_ranks(rate, true);
  const auto r3 = detail::competition_ranks(time, false);
  std::vector<double> sums(configs.size());
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] = r1[i] + r2[i] + r3[i];
  const auto overall = detail::competition_ranks(sums, false);
  std::map<std::string, int> out;
  std::size_t i = 0;
  for (const auto& entry : configs) out[entry.first] = overall[i++];
  return out;
}

// Circular fingerprint: atom identifiers hashed from the element, degree and
// hydrogen count, then refined `radius` times from sorted (bond order,
// neighbour identifier) lists. The fingerprint is the set of all identifiers
// from every iteration.
inline std::set<std::uint64_t> morgan_fingerprint(const Molecule& m, int radius = 2) {
  const Adjacency adj = m.adjacency();
  const auto ring_atoms = ring_atom_mask(m);
  const auto n = static_cast<std::size_t>(m.atom_count());
  std::vector<std::uint64_t> ids(n);
  std::set<std::uint64_t> out;
  for (std::size_t a = 0; a < n; ++a) {
    const int i = static_cast<int>(a);
    std::uint64_t h = hash_combine(0, static_cast<std::uint64_t>(element_index(m.atom(i).element)));
    h = hash_combine(h, static_cast<std::uint64_t>(adj[a].size()));
    h = hash_combine(h, static_cast<std::uint64_t>(m.implicit_hydrogens(i)));
    h = hash_combine(h, ring_atoms[a] ? 1u : 0u);
    ids[a] = h;
    out.insert(h);
  }
  std::vector<std::uint64_t> next(n);
  std::vector<std::pair<int, std::uint64_t>> env;
  for (int r = 1; r <= radius; ++r) {
    for (std::size_t a = 0; a < n; ++a) {
      env.clear();
      for (const Neighbor& nb : adj[a]) {
        env.emplace_back(order_value(m.bond(nb.bond).order), ids[static_cast<std::size_t>(nb.atom)]);
      }
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash_combine(static_cast<std::uint64_t>(r), ids[a]);
      for (const auto& [order, id] : env) h = hash_combine(hash_combine(h, static_cast<std::uint64_t>(order)), id);
      next[a] = h;
      out.insert(h);
    }
    ids.swap(next);
  }
  return out;
}

inline double tanimoto(const std::set<std::uint64_t>& a, const std::set<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (std::uint64_t x : a) common += b.count(x);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

inline double morgan_tanimoto(const Molecule& a, const Molecule& b, int radius = 2) {
  return tanimoto(morgan_fingerprint(a, radius), morgan_fingerprint(b, radius));
}

}  // namespace editopt

#pragma once

#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "editopt/molecule.hpp"

namespace editopt {

class UnknownProperty : public std::invalid_argument {
 public:
  explicit UnknownProperty(const std::string& name) : std::invalid_argument("unknown property '" + name + "'") {}
};

// A deterministic property function P over valid molecules.
struct PropertyOracle {
  std::string name;
  std::function<double(const Molecule&)> eval;
  // False if eval must not be called from several threads at once.
  bool concurrent = true;

  double operator()(const Molecule& m) const { return eval(m); }
};

inline double heavy_atom_count(const Molecule& m) { return m.atom_count(); }

inline double molecular_weight(const Molecule& m) {
  double w = 0.0;
  for (int a = 0; a < m.atom_count(); ++a) {
    w += atomic_weight(m.atom(a).element) + kHydrogenWeight * m.implicit_hydrogens(a);
  }
  return w;
}

inline double ring_count_property(const Molecule& m) { return ring_count(m); }

// Sum of shortest-path distances over unordered heavy-atom pairs.
inline double wiener_index(const Molecule& m) {
  const Adjacency adj = m.adjacency();
  const int n = m.atom_count();
  long long total = 0;
  std::vector<int> dist;
  for (int s = 0; s < n; ++s) {
    dist.assign(static_cast<std::size_t>(n), -1);
    dist[static_cast<std::size_t>(s)] = 0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (const Neighbor& nb : adj[static_cast<std::size_t>(u)]) {
        if (dist[static_cast<std::size_t>(nb.atom)] >= 0) continue;
        dist[static_cast<std::size_t>(nb.atom)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(nb.atom);
      }
    }
    for (int t = s + 1; t < n; ++t) total += dist[static_cast<std::size_t>(t)];
  }
  return static_cast<double>(total);
}

inline double polarity_proxy(const Molecule& m) {
  double v = 0.0;
  for (const Atom& a : m.atoms()) {
    if (a.element == Element::N || a.element == Element::O || a.element == Element::F) v += 1.0;
    if (a.element == Element::C) v -= 0.5;
  }
  return v;
}

inline const std::vector<PropertyOracle>& builtin_properties() {
  static const std::vector<PropertyOracle> registry = {
      {"heavy_atom_count", heavy_atom_count},
      {"molecular_weight", molecular_weight},
      {"ring_count", ring_count_property},
      {"wiener_index", wiener_index},
      {"polarity_proxy", polarity_proxy},
  };
  return registry;
}

inline const PropertyOracle& find_property(std::string_view name) {
  for (const PropertyOracle& p : builtin_properties()) {
    if (p.name == name) return p;
  }
  throw UnknownProperty(std::string(name));
}

}  // namespace editopt

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "editopt/element.hpp"

namespace editopt {

enum class AtomParity : std::uint8_t { None, Clockwise, CounterClockwise };
enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3 };
enum class BondStereo : std::uint8_t { None, Cis, Trans };

constexpr int order_value(BondOrder o) { return static_cast<int>(o); }

struct Atom {
  Element element = Element::C;
  AtomParity parity = AtomParity::None;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::Single;
  BondStereo stereo = BondStereo::None;

  bool joins(int a, int b) const {
    return (begin == a && end == b) || (begin == b && end == a);
  }
  bool touches(int a) const { return begin == a || end == a; }
  int other(int a) const { return a == begin ? end : begin; }

  friend bool operator==(const Bond&, const Bond&) = default;
};

struct Neighbor {
  int atom;
  int bond;
};

using Adjacency = std::vector<std::vector<Neighbor>>;

// Hydrogen-suppressed molecular graph. Implicit hydrogens are derived from the
// valence table and never stored. Mutators do no validation; use
// check_validity() before trusting an edited graph.
class Molecule {
 public:
  Molecule() = default;
  Molecule(std::vector<Atom> atoms, std::vector<Bond> bonds)
      : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {}

  int atom_count() const { return static_cast<int>(atoms_.size()); }
  int bond_count() const { return static_cast<int>(bonds_.size()); }
  bool empty() const { return atoms_.empty(); }

  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }
  const Atom& atom(int i) const { return atoms_.at(static_cast<std::size_t>(i)); }
  const Bond& bond(int i) const { return bonds_.at(static_cast<std::size_t>(i)); }
  Atom& atom(int i) { return atoms_.at(static_cast<std::size_t>(i)); }
  Bond& bond(int i) { return bonds_.at(static_cast<std::size_t>(i)); }

  int add_atom(Atom a) {
    atoms_.push_back(a);
    return atom_count() - 1;
  }
  int add_bond(Bond b) {
    bonds_.push_back(b);
    return bond_count() - 1;
  }
  void remove_bond(int index) { bonds_.erase(bonds_.begin() + index); }

  bool has_atom(int i) const { return i >= 0 && i < atom_count(); }

  std::optional<int> find_bond(int a, int b) const {
    for (int i = 0; i < bond_count(); ++i) {
      if (bonds_[static_cast<std::size_t>(i)].joins(a, b)) return i;
    }
    return std::nullopt;
  }

  int degree(int a) const {
    return static_cast<int>(std::count_if(bonds_.begin(), bonds_.end(),
                                          [a](const Bond& b) { return b.touches(a); }));
  }

  int bond_order_sum(int a) const {
    int sum = 0;
    for (const Bond& b : bonds_) {
      if (b.touches(a)) sum += order_value(b.order);
    }
    return sum;
  }

  // May be negative for an over-valent (invalid) graph.
  int implicit_hydrogens(int a) const {
    return valence_cap(atom(a).element) - bond_order_sum(a);
  }

  // Neighbor lists; entries appear in bond-index order.
  Adjacency adjacency() const {
    Adjacency adj(atoms_.size());
    for (int i = 0; i < bond_count(); ++i) {
      const Bond& b = bonds_[static_cast<std::size_t>(i)];
      if (!has_atom(b.begin) || !has_atom(b.end)) continue;
      adj[static_cast<std::size_t>(b.begin)].push_back({b.end, i});
      if (b.end != b.begin) adj[static_cast<std::size_t>(b.end)].push_back({b.begin, i});
    }
    return adj;
  }

  friend bool operator==(const Molecule&, const Molecule&) = default;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
};

inline bool is_connected(const Molecule& m, const Adjacency& adj) {
  if (m.empty()) return false;
  std::vector<char> seen(static_cast<std::size_t>(m.atom_count()), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (const Neighbor& n : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(n.atom)]) {
        seen[static_cast<std::size_t>(n.atom)] = 1;
        ++reached;
        stack.push_back(n.atom);
      }
    }
  }
  return reached == m.atom_count();
}

inline bool is_connected(const Molecule& m) { return is_connected(m, m.adjacency()); }

// Marks every bond that lies on a cycle (i.e. is not a bridge).
inline std::vector<bool> ring_bond_mask(const Molecule& m, const Adjacency& adj) {
  const auto n = static_cast<std::size_t>(m.atom_count());
  std::vector<bool> in_ring(static_cast<std::size_t>(m.bond_count()), true);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  // Iterative Tarjan bridge finding.
  struct Frame {
    int atom;
    int parent_bond;
    std::size_t next;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (disc[root] >= 0) continue;
    std::vector<Frame> stack{{static_cast<int>(root), -1, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto u = static_cast<std::size_t>(f.atom);
      if (f.next < adj[u].size()) {
        const Neighbor nb = adj[u][f.next++];
        if (nb.bond == f.parent_bond) continue;
        const auto v = static_cast<std::size_t>(nb.atom);
        if (disc[v] < 0) {
          disc[v] = low[v] = timer++;
          stack.push_back({nb.atom, nb.bond, 0});
        } else {
          low[u] = std::min(low[u], disc[v]);
        }
      } else {
        const int parent_bond = f.parent_bond;
        stack.pop_back();
        if (!stack.empty()) {
          const auto p = static_cast<std::size_t>(stack.back().atom);
          low[p] = std::min(low[p], low[u]);
          if (low[u] > disc[p]) in_ring[static_cast<std::size_t>(parent_bond)] = false;
        }
      }
    }
  }
  return in_ring;
}

inline std::vector<bool> ring_bond_mask(const Molecule& m) {
  return ring_bond_mask(m, m.adjacency());
}

inline std::vector<bool> ring_atom_mask(const Molecule& m) {
  std::vector<bool> atoms(static_cast<std::size_t>(m.atom_count()), false);
  const auto bonds = ring_bond_mask(m);
  for (int i = 0; i < m.bond_count(); ++i) {
    if (bonds[static_cast<std::size_t>(i)]) {
      atoms[static_cast<std::size_t>(m.bond(i).begin)] = true;
      atoms[static_cast<std::size_t>(m.bond(i).end)] = true;
    }
  }
  return atoms;
}

// Circuit rank |E| - |V| + 1 of a connected graph.
inline int ring_count(const Molecule& m) {
  if (m.empty()) return 0;
  return m.bond_count() - m.atom_count() + 1;
}

}  // namespace editopt

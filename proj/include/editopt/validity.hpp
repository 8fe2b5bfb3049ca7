#pragma once

#include <string>
#include <vector>

#include "editopt/molecule.hpp"

namespace editopt {

struct ValidityReport {
  std::vector<std::string> reasons;

  bool valid() const { return reasons.empty(); }
  explicit operator bool() const { return valid(); }
};

namespace detail {

// A double bond may carry cis/trans only when it is acyclic and each endpoint
// keeps another single-bonded neighbour to anchor the flag.
inline bool bond_stereo_placeable(const Molecule& m, int bond_index,
                                  const std::vector<bool>& ring_bonds) {
  const Bond& b = m.bond(bond_index);
  if (b.order != BondOrder::Double) return false;
  if (ring_bonds[static_cast<std::size_t>(bond_index)]) return false;
  auto anchored = [&](int atom) {
    for (int i = 0; i < m.bond_count(); ++i) {
      if (i == bond_index) continue;
      const Bond& o = m.bond(i);
      if (o.touches(atom) && o.order == BondOrder::Single) return true;
    }
    return false;
  };
  return anchored(b.begin) && anchored(b.end);
}

template <bool Collect>
bool run_validity(const Molecule& m, std::vector<std::string>* reasons) {
  bool ok = true;
  auto fail = [&](std::string why) {
    ok = false;
    if constexpr (Collect) reasons->push_back(std::move(why));
  };

  if (m.empty()) {
    fail("molecule has no atoms");
    return false;
  }

  const int n = m.atom_count();
  std::vector<int> order_sum(static_cast<std::size_t>(n), 0);
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  bool bonds_sane = true;
  for (int i = 0; i < m.bond_count(); ++i) {
    const Bond& b = m.bond(i);
    if (!m.has_atom(b.begin) || !m.has_atom(b.end)) {
      fail("bond " + std::to_string(i) + " references a missing atom");
      bonds_sane = false;
      continue;
    }
    if (b.begin == b.end) {
      fail("bond " + std::to_string(i) + " is a self loop");
      bonds_sane = false;
      continue;
    }
    for (int j = 0; j < i; ++j) {
      if (m.bond(j).joins(b.begin, b.end)) {
        fail("atoms " + std::to_string(b.begin) + " and " + std::to_string(b.end) +
             " share more than one bond");
        bonds_sane = false;
      }
    }
    order_sum[static_cast<std::size_t>(b.begin)] += order_value(b.order);
    order_sum[static_cast<std::size_t>(b.end)] += order_value(b.order);
    ++degree[static_cast<std::size_t>(b.begin)];
    ++degree[static_cast<std::size_t>(b.end)];
  }
  if (!ok && !Collect) return false;

  for (int a = 0; a < n; ++a) {
    const Atom& atom = m.atom(a);
    if (order_sum[static_cast<std::size_t>(a)] > valence_cap(atom.element)) {
      fail("atom " + std::to_string(a) + " (" + std::string(symbol(atom.element)) +
           ") exceeds valence " + std::to_string(valence_cap(atom.element)));
      if constexpr (!Collect) return false;
    }
    if (atom.parity != AtomParity::None && degree[static_cast<std::size_t>(a)] < 3) {
      fail("atom " + std::to_string(a) + " carries parity with fewer than three neighbours");
      if constexpr (!Collect) return false;
    }
  }

  if (!bonds_sane) return ok;

  const Adjacency adj = m.adjacency();
  if (!is_connected(m, adj)) {
    fail("graph is not connected");
    if constexpr (!Collect) return false;
  }

  bool any_bond_stereo = false;
  for (const Bond& b : m.bonds()) any_bond_stereo |= b.stereo != BondStereo::None;
  if (any_bond_stereo) {
    const auto ring_bonds = ring_bond_mask(m, adj);
    for (int i = 0; i < m.bond_count(); ++i) {
      if (m.bond(i).stereo == BondStereo::None) continue;
      if (!bond_stereo_placeable(m, i, ring_bonds)) {
        fail("bond " + std::to_string(i) + " carries cis/trans where it cannot be placed");
        if constexpr (!Collect) return false;
      }
    }
  }
  return ok;
}

}  // namespace detail

// The validity checker: valence caps, connectivity, and legal stereo placement.
inline ValidityReport validate(const Molecule& m) {
  ValidityReport report;
  detail::run_validity<true>(m, &report.reasons);
  return report;
}

inline bool check_validity(const Molecule& m) { return detail::run_validity<false>(m, nullptr); }

}  // namespace editopt

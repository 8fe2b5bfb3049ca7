#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <tuple>
#include <string>
#include <vector>

#include "editopt/molecule.hpp"

namespace editopt {

// Canonical labelling of a molecule. `order[k]` is the atom placed at
// canonical position k; `key` is an opaque ASCII string that is equal for two
// molecules exactly when they are isomorphic (element, bond order and both
// stereo flags respected). Keys are stable within one library version only.
struct CanonicalForm {
  std::string key;
  std::vector<int> order;
};

namespace detail {

struct CanonGraph {
  int n = 0;
  std::vector<int> atom_label;
  // (neighbour, bond label) pairs.
  std::vector<std::vector<std::pair<int, int>>> adj;
  std::vector<std::pair<std::pair<int, int>, int>> edges;
};

inline int bond_label(const Bond& b) {
  return order_value(b.order) * 3 + static_cast<int>(b.stereo);
}

inline CanonGraph make_canon_graph(const Molecule& m) {
  CanonGraph g;
  g.n = m.atom_count();
  g.atom_label.resize(static_cast<std::size_t>(g.n));
  g.adj.resize(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    g.atom_label[static_cast<std::size_t>(i)] =
        element_index(m.atom(i).element) * 3 + static_cast<int>(m.atom(i).parity);
  }
  for (const Bond& b : m.bonds()) {
    const int label = bond_label(b);
    g.adj[static_cast<std::size_t>(b.begin)].push_back({b.end, label});
    g.adj[static_cast<std::size_t>(b.end)].push_back({b.begin, label});
    g.edges.push_back({{b.begin, b.end}, label});
  }
  return g;
}

// Replaces `keys` by dense ranks (0..k-1) preserving their order; returns k.
template <typename Key>
int dense_rank(const std::vector<Key>& keys, std::vector<int>& out) {
  const std::size_t n = keys.size();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)];
  });
  out.assign(n, 0);
  int rank = -1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto cur = static_cast<std::size_t>(idx[i]);
    if (i == 0 || keys[static_cast<std::size_t>(idx[i - 1])] < keys[cur]) ++rank;
    out[cur] = rank;
  }
  return rank + 1;
}

// Iterated neighbourhood refinement (Morgan-style) to a stable partition.
inline int refine(const CanonGraph& g, std::vector<int>& colors) {
  int classes = 1 + *std::max_element(colors.begin(), colors.end());
  std::vector<std::vector<int>> sig(static_cast<std::size_t>(g.n));
  std::vector<int> next;
  while (classes < g.n) {
    for (int v = 0; v < g.n; ++v) {
      auto& s = sig[static_cast<std::size_t>(v)];
      s.clear();
      for (const auto& [u, label] : g.adj[static_cast<std::size_t>(v)]) {
        s.push_back(colors[static_cast<std::size_t>(u)] * 16 + label);
      }
      std::sort(s.begin(), s.end());
      s.insert(s.begin(), colors[static_cast<std::size_t>(v)]);
    }
    const int refined = dense_rank(sig, next);
    colors.swap(next);
    if (refined == classes) break;
    classes = refined;
  }
  return classes;
}

struct CanonSearch {
  const CanonGraph& g;
  std::vector<std::int64_t> best_cert;
  std::vector<int> best_order;
  bool have_best = false;

  std::vector<std::int64_t> certificate(const std::vector<int>& colors,
                                        std::vector<int>& order) const {
    order.assign(static_cast<std::size_t>(g.n), 0);
    for (int v = 0; v < g.n; ++v) order[static_cast<std::size_t>(colors[static_cast<std::size_t>(v)])] = v;
    std::vector<std::int64_t> cert;
    cert.reserve(static_cast<std::size_t>(g.n) + g.edges.size() + 2);
    cert.push_back(g.n);
    for (int k = 0; k < g.n; ++k) cert.push_back(g.atom_label[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
    const std::size_t edge_start = cert.size();
    for (const auto& [ends, label] : g.edges) {
      std::int64_t a = colors[static_cast<std::size_t>(ends.first)];
      std::int64_t b = colors[static_cast<std::size_t>(ends.second)];
      if (a > b) std::swap(a, b);
      cert.push_back((a * g.n + b) * 16 + label);
    }
    std::sort(cert.begin() + static_cast<std::ptrdiff_t>(edge_start), cert.end());
    return cert;
  }

  void run(std::vector<int> colors) {
    const int classes = refine(g, colors);
    if (classes == g.n) {
      std::vector<int> order;
      auto cert = certificate(colors, order);
      if (!have_best || cert < best_cert) {
        best_cert = std::move(cert);
        best_order = std::move(order);
        have_best = true;
      }
      return;
    }
    // Individualize each member of the first non-singleton cell in turn.
    std::vector<int> cell_size(static_cast<std::size_t>(classes), 0);
    for (int c : colors) ++cell_size[static_cast<std::size_t>(c)];
    int target = 0;
    while (cell_size[static_cast<std::size_t>(target)] < 2) ++target;
    std::vector<int> split(static_cast<std::size_t>(g.n));
    std::vector<int> ranked;
    for (int v = 0; v < g.n; ++v) {
      if (colors[static_cast<std::size_t>(v)] != target) continue;
      for (int x = 0; x < g.n; ++x) {
        const int c = colors[static_cast<std::size_t>(x)];
        split[static_cast<std::size_t>(x)] = c * 2 + ((c == target && x != v) ? 1 : 0);
      }
      dense_rank(split, ranked);
      run(ranked);
    }
  }
};

inline char order_char(int order) { return order == 1 ? '-' : order == 2 ? '=' : '#'; }

}  // namespace detail

inline CanonicalForm canonical_form(const Molecule& m) {
  CanonicalForm form;
  if (m.empty()) return form;
  const detail::CanonGraph g = detail::make_canon_graph(m);
  std::vector<int> colors;
  detail::dense_rank(g.atom_label, colors);
  detail::CanonSearch search{g, {}, {}, false};
  search.run(std::move(colors));
  form.order = std::move(search.best_order);

  std::vector<int> pos(static_cast<std::size_t>(g.n));
  for (int k = 0; k < g.n; ++k) pos[static_cast<std::size_t>(form.order[static_cast<std::size_t>(k)])] = k;

  std::string& key = form.key;
  for (int k = 0; k < g.n; ++k) {
    const Atom& a = m.atom(form.order[static_cast<std::size_t>(k)]);
    if (k) key += ',';
    key += symbol(a.element);
    if (a.parity == AtomParity::CounterClockwise) key += '@';
    if (a.parity == AtomParity::Clockwise) key += "@@";
  }
  key += ';';
  std::vector<std::tuple<int, int, int, int>> edges;
  for (const Bond& b : m.bonds()) {
    int x = pos[static_cast<std::size_t>(b.begin)];
    int y = pos[static_cast<std::size_t>(b.end)];
    if (x > y) std::swap(x, y);
    edges.emplace_back(x, y, order_value(b.order), static_cast<int>(b.stereo));
  }
  std::sort(edges.begin(), edges.end());
  bool first = true;
  for (const auto& [x, y, order, stereo] : edges) {
    if (!first) key += ',';
    first = false;
    key += std::to_string(x);
    key += detail::order_char(order);
    key += std::to_string(y);
    if (stereo == static_cast<int>(BondStereo::Cis)) key += 'c';
    if (stereo == static_cast<int>(BondStereo::Trans)) key += 't';
  }
  return form;
}

inline std::string canonical_key(const Molecule& m) { return canonical_form(m).key; }

inline bool isomorphic(const Molecule& a, const Molecule& b) {
  if (a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count()) return false;
  return canonical_key(a) == canonical_key(b);
}

}  // namespace editopt

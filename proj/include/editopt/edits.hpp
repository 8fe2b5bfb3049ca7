#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "editopt/canonical.hpp"
#include "editopt/molecule.hpp"
#include "editopt/validity.hpp"

namespace editopt {

// The twelve graph-edit primitives, in enumeration order.
enum class EditKind : std::uint8_t {
  AtomReplace,
  AtomAdd,
  RingForm,
  RingOpen,
  DoubleBondForm,
  DoubleToSingle,
  TripleBondForm,
  TripleToSingle,
  AddStereo,
  RemoveStereo,
  DoubleRingForm,
  DoubleRingOpen,
};

inline constexpr int kEditKindCount = 12;

inline constexpr std::array<std::string_view, kEditKindCount> kEditKindNames = {
    "AtomReplace",    "AtomAdd",        "RingForm",       "RingOpen",
    "DoubleBondForm", "DoubleToSingle", "TripleBondForm", "TripleToSingle",
    "AddStereo",      "RemoveStereo",   "DoubleRingForm", "DoubleRingOpen"};

constexpr std::string_view to_string(EditKind k) { return kEditKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<EditKind> edit_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kEditKindNames.size(); ++i) {
    if (kEditKindNames[i] == s) return static_cast<EditKind>(i);
  }
  return std::nullopt;
}

class EditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSite : public EditError {
 public:
  using EditError::EditError;
};

class IncoherentAction : public EditError {
 public:
  using EditError::EditError;
};

// One discrete edit. Sites are atom indices into the pre-edit molecule; a bond
// is addressed by its two endpoint atoms. Built only through the named
// factories, which check arity.
class EditAction {
 public:
  static EditAction atom_replace(int atom, Element e) { return {EditKind::AtomReplace, {atom}, e}; }
  static EditAction atom_add(int atom, Element e) { return {EditKind::AtomAdd, {atom}, e}; }
  static EditAction ring_form(int a, int b) { return {EditKind::RingForm, {a, b}}; }
  static EditAction ring_open(int a, int b) { return {EditKind::RingOpen, {a, b}}; }
  static EditAction double_bond_form(int a, int b) { return {EditKind::DoubleBondForm, {a, b}}; }
  static EditAction double_to_single(int a, int b) { return {EditKind::DoubleToSingle, {a, b}}; }
  static EditAction triple_bond_form(int a, int b) { return {EditKind::TripleBondForm, {a, b}}; }
  static EditAction triple_to_single(int a, int b) { return {EditKind::TripleToSingle, {a, b}}; }
  static EditAction add_atom_stereo(int atom, AtomParity p) {
    return {EditKind::AddStereo, {atom}, Element::C, p};
  }
  static EditAction add_bond_stereo(int a, int b, BondStereo s) {
    return {EditKind::AddStereo, {a, b}, Element::C, AtomParity::None, s};
  }
  static EditAction remove_atom_stereo(int atom) { return {EditKind::RemoveStereo, {atom}}; }
  static EditAction remove_bond_stereo(int a, int b) { return {EditKind::RemoveStereo, {a, b}}; }
  static EditAction double_ring_form(int a, int b, int c, int d) {
    return {EditKind::DoubleRingForm, {a, b, c, d}};
  }
  static EditAction double_ring_open(int a, int b, int c, int d) {
    return {EditKind::DoubleRingOpen, {a, b, c, d}};
  }

  EditKind kind() const { return kind_; }
  const std::vector<int>& sites() const { return sites_; }
  Element element() const { return element_; }
  AtomParity parity() const { return parity_; }
  BondStereo bond_stereo() const { return stereo_; }
  bool addresses_bond() const { return sites_.size() == 2; }

  // Same edit with every site renamed through `mapping` (old index -> new).
  EditAction relabeled(std::span<const int> mapping) const {
    std::vector<int> sites;
    for (int s : sites_) {
      if (s < 0 || static_cast<std::size_t>(s) >= mapping.size()) throw InvalidSite("site outside relabelling");
      sites.push_back(mapping[static_cast<std::size_t>(s)]);
    }
    return {kind_, std::move(sites), element_, parity_, stereo_};
  }

  friend auto operator<=>(const EditAction&, const EditAction&) = default;
  friend bool operator==(const EditAction&, const EditAction&) = default;

 private:
  EditAction(EditKind kind, std::vector<int> sites, Element e = Element::C,
             AtomParity p = AtomParity::None, BondStereo s = BondStereo::None)
      : kind_(kind), sites_(std::move(sites)), element_(e), parity_(p), stereo_(s) {
    normalize_and_check();
  }

  void normalize_and_check() {
    auto pair_ok = [](int a, int b) { return a != b; };
    auto sort_pair = [](int& a, int& b) {
      if (a > b) std::swap(a, b);
    };
    const std::size_t n = sites_.size();
    switch (kind_) {
      case EditKind::AtomReplace:
      case EditKind::AtomAdd:
        if (n != 1) throw std::invalid_argument("atom edit needs exactly one site");
        break;
      case EditKind::RingForm:
      case EditKind::RingOpen:
      case EditKind::DoubleBondForm:
      case EditKind::DoubleToSingle:
      case EditKind::TripleBondForm:
      case EditKind::TripleToSingle:
        if (n != 2 || !pair_ok(sites_[0], sites_[1]))
          throw std::invalid_argument("bond edit needs one bond specification");
        sort_pair(sites_[0], sites_[1]);
        break;
      case EditKind::AddStereo:
        if (n == 1) {
          if (parity_ == AtomParity::None || stereo_ != BondStereo::None)
            throw std::invalid_argument("atom stereo edit needs a parity value");
        } else if (n == 2 && pair_ok(sites_[0], sites_[1])) {
          if (stereo_ == BondStereo::None || parity_ != AtomParity::None)
            throw std::invalid_argument("bond stereo edit needs a cis/trans value");
          sort_pair(sites_[0], sites_[1]);
        } else {
          throw std::invalid_argument("stereo edit needs one atom or one bond");
        }
        break;
      case EditKind::RemoveStereo:
        if (n == 2 && pair_ok(sites_[0], sites_[1])) {
          sort_pair(sites_[0], sites_[1]);
        } else if (n != 1) {
          throw std::invalid_argument("stereo edit needs one atom or one bond");
        }
        break;
      case EditKind::DoubleRingForm:
      case EditKind::DoubleRingOpen: {
        if (n != 4 || !pair_ok(sites_[0], sites_[1]) || !pair_ok(sites_[2], sites_[3]))
          throw std::invalid_argument("double ring edit needs two bond specifications");
        sort_pair(sites_[0], sites_[1]);
        sort_pair(sites_[2], sites_[3]);
        if (std::tie(sites_[0], sites_[1]) > std::tie(sites_[2], sites_[3])) {
          std::swap(sites_[0], sites_[2]);
          std::swap(sites_[1], sites_[3]);
        }
        if (sites_[0] == sites_[2] && sites_[1] == sites_[3])
          throw std::invalid_argument("double ring edit needs two distinct bonds");
        const bool share = sites_[0] == sites_[2] || sites_[0] == sites_[3] ||
                           sites_[1] == sites_[2] || sites_[1] == sites_[3];
        if (!share) throw std::invalid_argument("double ring edit bonds must share an atom");
        break;
      }
    }
  }

  EditKind kind_;
  std::vector<int> sites_;
  Element element_;
  AtomParity parity_;
  BondStereo stereo_;
};

namespace detail {

inline void require_sites(const Molecule& m, const EditAction& a) {
  for (int s : a.sites()) {
    if (!m.has_atom(s)) {
      throw InvalidSite(std::string(to_string(a.kind())) + ": site " + std::to_string(s) +
                        " out of range for " + std::to_string(m.atom_count()) + " atoms");
    }
  }
}

[[noreturn]] inline void incoherent(const EditAction& a, const std::string& why) {
  throw IncoherentAction(std::string(to_string(a.kind())) + ": " + why);
}

inline int require_bond(const Molecule& m, const EditAction& a, int x, int y) {
  const auto b = m.find_bond(x, y);
  if (!b) incoherent(a, "no bond between atoms " + std::to_string(x) + " and " + std::to_string(y));
  return *b;
}

inline void require_no_bond(const Molecule& m, const EditAction& a, int x, int y) {
  if (m.find_bond(x, y))
    incoherent(a, "atoms " + std::to_string(x) + " and " + std::to_string(y) + " are already bonded");
}

inline void change_order(Molecule& m, const EditAction& a, BondOrder from, BondOrder to) {
  const int b = require_bond(m, a, a.sites()[0], a.sites()[1]);
  if (m.bond(b).order != from) incoherent(a, "bond has the wrong order for this edit");
  m.bond(b).order = to;
  m.bond(b).stereo = BondStereo::None;
}

}  // namespace detail

// Deterministic transition operator. The result is not validated; new atoms
// are appended and all other indices are preserved (removed bonds excepted).
inline Molecule apply(const Molecule& m, const EditAction& a) {
  detail::require_sites(m, a);
  Molecule out = m;
  const auto& s = a.sites();
  switch (a.kind()) {
    case EditKind::AtomReplace:
      if (out.atom(s[0]).element == a.element()) detail::incoherent(a, "atom already has that element");
      out.atom(s[0]).element = a.element();
      break;
    case EditKind::AtomAdd: {
      const int fresh = out.add_atom({a.element(), AtomParity::None});
      out.add_bond({s[0], fresh, BondOrder::Single, BondStereo::None});
      break;
    }
    case EditKind::RingForm:
      detail::require_no_bond(out, a, s[0], s[1]);
      out.add_bond({s[0], s[1], BondOrder::Single, BondStereo::None});
      break;
    case EditKind::RingOpen:
      out.remove_bond(detail::require_bond(out, a, s[0], s[1]));
      break;
    case EditKind::DoubleBondForm:
      detail::change_order(out, a, BondOrder::Single, BondOrder::Double);
      break;
    case EditKind::DoubleToSingle:
      detail::change_order(out, a, BondOrder::Double, BondOrder::Single);
      break;
    case EditKind::TripleBondForm:
      detail::change_order(out, a, BondOrder::Single, BondOrder::Triple);
      break;
    case EditKind::TripleToSingle:
      detail::change_order(out, a, BondOrder::Triple, BondOrder::Single);
      break;
    case EditKind::AddStereo:
      if (a.addresses_bond()) {
        const int b = detail::require_bond(out, a, s[0], s[1]);
        if (out.bond(b).order != BondOrder::Double) detail::incoherent(a, "cis/trans needs a double bond");
        if (out.bond(b).stereo != BondStereo::None) detail::incoherent(a, "bond already has cis/trans");
        out.bond(b).stereo = a.bond_stereo();
      } else {
        if (out.atom(s[0]).parity != AtomParity::None) detail::incoherent(a, "atom already has parity");
        out.atom(s[0]).parity = a.parity();
      }
      break;
    case EditKind::RemoveStereo:
      if (a.addresses_bond()) {
        const int b = detail::require_bond(out, a, s[0], s[1]);
        if (out.bond(b).stereo == BondStereo::None) detail::incoherent(a, "bond has no cis/trans");
        out.bond(b).stereo = BondStereo::None;
      } else {
        if (out.atom(s[0]).parity == AtomParity::None) detail::incoherent(a, "atom has no parity");
        out.atom(s[0]).parity = AtomParity::None;
      }
      break;
    case EditKind::DoubleRingForm:
      detail::require_no_bond(out, a, s[0], s[1]);
      detail::require_no_bond(out, a, s[2], s[3]);
      out.add_bond({s[0], s[1], BondOrder::Single, BondStereo::None});
      out.add_bond({s[2], s[3], BondOrder::Single, BondStereo::None});
      break;
    case EditKind::DoubleRingOpen: {
      int b1 = detail::require_bond(out, a, s[0], s[1]);
      int b2 = detail::require_bond(out, a, s[2], s[3]);
      if (b1 < b2) std::swap(b1, b2);
      out.remove_bond(b1);
      out.remove_bond(b2);
      break;
    }
  }
  return out;
}

// Syntactic candidate edits, sorted by kind, then sites, then parameters.
inline std::vector<EditAction> enumerate_actions(const Molecule& m) {
  std::vector<EditAction> out;
  const int n = m.atom_count();
  const Adjacency adj = m.adjacency();
  const auto ring_bonds = ring_bond_mask(m, adj);
  auto bonded = [&](int a, int b) { return m.find_bond(a, b).has_value(); };

  for (int a = 0; a < n; ++a) {
    for (Element e : kElements) {
      if (e != m.atom(a).element) out.push_back(EditAction::atom_replace(a, e));
    }
  }
  for (int a = 0; a < n; ++a) {
    for (Element e : kElements) out.push_back(EditAction::atom_add(a, e));
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (!bonded(a, b)) out.push_back(EditAction::ring_form(a, b));
    }
  }
  for (int i = 0; i < m.bond_count(); ++i) {
    const Bond& b = m.bond(i);
    if (ring_bonds[static_cast<std::size_t>(i)]) out.push_back(EditAction::ring_open(b.begin, b.end));
    switch (b.order) {
      case BondOrder::Single:
        out.push_back(EditAction::double_bond_form(b.begin, b.end));
        out.push_back(EditAction::triple_bond_form(b.begin, b.end));
        break;
      case BondOrder::Double:
        out.push_back(EditAction::double_to_single(b.begin, b.end));
        if (b.stereo == BondStereo::None) {
          out.push_back(EditAction::add_bond_stereo(b.begin, b.end, BondStereo::Cis));
          out.push_back(EditAction::add_bond_stereo(b.begin, b.end, BondStereo::Trans));
        } else {
          out.push_back(EditAction::remove_bond_stereo(b.begin, b.end));
        }
        break;
      case BondOrder::Triple:
        out.push_back(EditAction::triple_to_single(b.begin, b.end));
        break;
    }
  }
  for (int a = 0; a < n; ++a) {
    if (m.atom(a).parity != AtomParity::None) {
      out.push_back(EditAction::remove_atom_stereo(a));
    } else if (adj[static_cast<std::size_t>(a)].size() >= 3) {
      out.push_back(EditAction::add_atom_stereo(a, AtomParity::Clockwise));
      out.push_back(EditAction::add_atom_stereo(a, AtomParity::CounterClockwise));
    }
  }
  // Double ring edits: bond pairs sharing an atom.
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y == x || bonded(x, y)) continue;
      for (int z = y + 1; z < n; ++z) {
        if (z == x || bonded(x, z)) continue;
        out.push_back(EditAction::double_ring_form(x, y, x, z));
      }
    }
  }
  for (int i = 0; i < m.bond_count(); ++i) {
    if (!ring_bonds[static_cast<std::size_t>(i)]) continue;
    for (int j = i + 1; j < m.bond_count(); ++j) {
      if (!ring_bonds[static_cast<std::size_t>(j)]) continue;
      const Bond& p = m.bond(i);
      const Bond& q = m.bond(j);
      if (p.touches(q.begin) || p.touches(q.end))
        out.push_back(EditAction::double_ring_open(p.begin, p.end, q.begin, q.end));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// A feasible edit together with the molecule it produces.
struct Candidate {
  EditAction action;
  Molecule result;
  std::string key;
};

namespace detail {

// Valence-only rejection that never disagrees with check_validity().
inline bool obviously_overvalent(const Molecule& m, const std::vector<int>& free, const EditAction& a) {
  const auto& s = a.sites();
  auto f = [&](int atom) { return free[static_cast<std::size_t>(atom)]; };
  switch (a.kind()) {
    case EditKind::AtomReplace:
      return valence_cap(a.element()) < valence_cap(m.atom(s[0]).element) - f(s[0]);
    case EditKind::AtomAdd:
      return f(s[0]) < 1;
    case EditKind::RingForm:
    case EditKind::DoubleBondForm:
      return f(s[0]) < 1 || f(s[1]) < 1;
    case EditKind::TripleBondForm:
      return f(s[0]) < 2 || f(s[1]) < 2;
    case EditKind::DoubleRingForm: {
      std::array<int, 4> sorted = {s[0], s[1], s[2], s[3]};
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < 4;) {
        std::size_t j = i;
        while (j < 4 && sorted[j] == sorted[i]) ++j;
        if (f(sorted[i]) < static_cast<int>(j - i)) return true;
        i = j;
      }
      return false;
    }
    default:
      return false;
  }
}

}  // namespace detail

// Feasible edits: enumerate, apply, keep chemically valid results, and drop
// later actions whose product duplicates an earlier one.
inline std::vector<Candidate> feasible_actions(const Molecule& m) {
  std::vector<Candidate> out;
  std::vector<int> free(static_cast<std::size_t>(m.atom_count()));
  for (int a = 0; a < m.atom_count(); ++a) free[static_cast<std::size_t>(a)] = m.implicit_hydrogens(a);
  std::unordered_set<std::string> seen;
  for (EditAction& action : enumerate_actions(m)) {
    if (detail::obviously_overvalent(m, free, action)) continue;
    Molecule result = apply(m, action);
    if (!check_validity(result)) continue;
    std::string key = canonical_key(result);
    if (!seen.insert(key).second) continue;
    out.push_back({std::move(action), std::move(result), std::move(key)});
  }
  return out;
}

// Fixed-length edit features: a one-hot of the edit kind followed by the
// normalized degree, normalized bond-order sum and ring membership of the
// edited site (averaged over the distinct site atoms).
struct EditDescriptor {
  static constexpr std::size_t kSize = 15;
  std::array<double, kSize> values{};
};

inline constexpr double kDescriptorMaxDegree = 4.0;

inline EditDescriptor describe(const Molecule& m, const EditAction& a) {
  detail::require_sites(m, a);
  EditDescriptor d;
  d.values[static_cast<std::size_t>(a.kind())] = 1.0;
  std::vector<int> atoms(a.sites().begin(), a.sites().end());
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  const auto ring_atoms = ring_atom_mask(m);
  double degree = 0.0, order_sum = 0.0;
  bool ring = false;
  for (int x : atoms) {
    degree += m.degree(x);
    order_sum += m.bond_order_sum(x);
    ring = ring || ring_atoms[static_cast<std::size_t>(x)];
  }
  const double count = static_cast<double>(atoms.size());
  d.values[12] = std::clamp(degree / count / kDescriptorMaxDegree, 0.0, 1.0);
  d.values[13] = std::clamp(order_sum / count / kDescriptorMaxDegree, 0.0, 1.0);
  d.values[14] = ring ? 1.0 : 0.0;
  return d;
}

// JSON form {"op": ..., "sites": [...], "params": {...}}.
inline nlohmann::json to_json(const EditAction& a) {
  nlohmann::json params = nlohmann::json::object();
  if (a.kind() == EditKind::AtomReplace || a.kind() == EditKind::AtomAdd) {
    params["element"] = std::string(symbol(a.element()));
  } else if (a.kind() == EditKind::AddStereo) {
    if (a.addresses_bond()) {
      params["stereo"] = a.bond_stereo() == BondStereo::Cis ? "cis" : "trans";
    } else {
      params["parity"] = a.parity() == AtomParity::Clockwise ? "cw" : "ccw";
    }
  }
  return {{"op", std::string(to_string(a.kind()))}, {"sites", a.sites()}, {"params", params}};
}

inline EditAction edit_from_json(const nlohmann::json& j) {
  const auto kind = edit_kind_from_string(j.at("op").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown edit op '" + j.at("op").get<std::string>() + "'");
  const auto sites = j.at("sites").get<std::vector<int>>();
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  auto site = [&](std::size_t i) {
    if (i >= sites.size()) throw std::invalid_argument("edit has too few sites");
    return sites[i];
  };
  auto element = [&]() {
    const auto e = element_from_symbol(params.at("element").get<std::string>());
    if (!e) throw std::invalid_argument("unsupported element in edit");
    return *e;
  };
  auto exact = [&](std::size_t n) {
    if (sites.size() != n) throw std::invalid_argument("edit has the wrong number of sites");
  };
  switch (*kind) {
    case EditKind::AtomReplace:
      exact(1);
      return EditAction::atom_replace(site(0), element());
    case EditKind::AtomAdd:
      exact(1);
      return EditAction::atom_add(site(0), element());
    case EditKind::RingForm:
      exact(2);
      return EditAction::ring_form(site(0), site(1));
    case EditKind::RingOpen:
      exact(2);
      return EditAction::ring_open(site(0), site(1));
    case EditKind::DoubleBondForm:
      exact(2);
      return EditAction::double_bond_form(site(0), site(1));
    case EditKind::DoubleToSingle:
      exact(2);
      return EditAction::double_to_single(site(0), site(1));
    case EditKind::TripleBondForm:
      exact(2);
      return EditAction::triple_bond_form(site(0), site(1));
    case EditKind::TripleToSingle:
      exact(2);
      return EditAction::triple_to_single(site(0), site(1));
    case EditKind::AddStereo:
      if (sites.size() == 1) {
        const auto p = params.at("parity").get<std::string>();
        if (p != "cw" && p != "ccw") throw std::invalid_argument("parity must be cw or ccw");
        return EditAction::add_atom_stereo(site(0), p == "cw" ? AtomParity::Clockwise
                                                              : AtomParity::CounterClockwise);
      } else {
        exact(2);
        const auto s = params.at("stereo").get<std::string>();
        if (s != "cis" && s != "trans") throw std::invalid_argument("stereo must be cis or trans");
        return EditAction::add_bond_stereo(site(0), site(1), s == "cis" ? BondStereo::Cis : BondStereo::Trans);
      }
    case EditKind::RemoveStereo:
      if (sites.size() == 1) return EditAction::remove_atom_stereo(site(0));
      exact(2);
      return EditAction::remove_bond_stereo(site(0), site(1));
    case EditKind::DoubleRingForm:
      exact(4);
      return EditAction::double_ring_form(site(0), site(1), site(2), site(3));
    case EditKind::DoubleRingOpen:
      exact(4);
      return EditAction::double_ring_open(site(0), site(1), site(2), site(3));
  }
  throw std::invalid_argument("unhandled edit op");
}

}  // namespace editopt

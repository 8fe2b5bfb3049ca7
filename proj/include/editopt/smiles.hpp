#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "editopt/canonical.hpp"
#include "editopt/molecule.hpp"
#include "editopt/validity.hpp"

namespace editopt {

class SmilesError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Unsupported, Invalid };

  SmilesError(Kind kind, std::size_t position, std::string reason)
      : std::runtime_error(describe(kind, position, reason)),
        kind_(kind),
        position_(position),
        reason_(std::move(reason)) {}

  Kind kind() const { return kind_; }
  std::size_t position() const { return position_; }
  const std::string& reason() const { return reason_; }

 private:
  static std::string describe(Kind kind, std::size_t position, const std::string& reason) {
    const char* label = kind == Kind::Syntax        ? "syntax error"
                        : kind == Kind::Unsupported ? "unsupported feature"
                                                    : "invalid molecule";
    return std::string(label) + " at position " + std::to_string(position) + ": " + reason;
  }

  Kind kind_;
  std::size_t position_;
  std::string reason_;
};

namespace detail {

// Direction marker carried by a single bond. `first` is the atom that
// precedes the other endpoint in the text.
struct DirectionMark {
  char dir = 0;
  int first = -1;
  std::size_t position = 0;
};

inline int dir_bit(char c) { return c == '\\' ? 1 : 0; }

inline bool is_bond_symbol(char c) {
  return c == '-' || c == '=' || c == '#' || c == '/' || c == '\\';
}

inline BondOrder order_of_symbol(char c) {
  if (c == '=') return BondOrder::Double;
  if (c == '#') return BondOrder::Triple;
  return BondOrder::Single;
}

// Picks, for atom `x` of double bond `db`, the direction-carrying single bond
// that appears first in the text. Returns -1 when none exists.
inline int first_marked_neighbor_bond(const Molecule& m, const std::vector<DirectionMark>& marks,
                                      int db, int x) {
  int best = -1;
  for (int j = 0; j < m.bond_count(); ++j) {
    if (j == db) continue;
    const Bond& b = m.bond(j);
    if (!b.touches(x) || b.order != BondOrder::Single) continue;
    const DirectionMark& mk = marks[static_cast<std::size_t>(j)];
    if (mk.dir == 0) continue;
    if (best < 0 || mk.position < marks[static_cast<std::size_t>(best)].position) best = j;
  }
  return best;
}

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  Molecule parse() {
    if (text_.empty()) fail(Kind::Syntax, 0, "empty input");
    enum class Last { None, Atom, Bond, Open, Close, Ring };
    Last last = Last::None;
    int prev = -1;
    Pending pending;
    std::vector<int> branches;

    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(') {
        if (last != Last::Atom && last != Last::Ring && last != Last::Close)
          fail(Kind::Syntax, pos_, "branch must follow an atom");
        branches.push_back(prev);
        last = Last::Open;
        ++pos_;
      } else if (c == ')') {
        if (branches.empty()) fail(Kind::Syntax, pos_, "unbalanced ')'");
        if (last == Last::Open) fail(Kind::Syntax, pos_, "empty branch");
        if (pending.symbol) fail(Kind::Syntax, pos_, "bond symbol without a following atom");
        prev = branches.back();
        branches.pop_back();
        last = Last::Close;
        ++pos_;
      } else if (is_bond_symbol(c)) {
        if (pending.symbol) fail(Kind::Syntax, pos_, "two consecutive bond symbols");
        if (prev < 0) fail(Kind::Syntax, pos_, "bond symbol before the first atom");
        pending = {c, pos_};
        last = Last::Bond;
        ++pos_;
      } else if (c == '%' || std::isdigit(static_cast<unsigned char>(c))) {
        if (prev < 0 || last == Last::Open)
          fail(Kind::Syntax, pos_, "ring closure must follow an atom");
        const std::size_t at = pos_;
        const int number = ring_number();
        close_or_open_ring(prev, number, pending, at);
        pending = {};
        last = Last::Ring;
      } else if (c == '[') {
        const std::size_t at = pos_;
        const int atom = bracket_atom();
        attach(prev, atom, pending, at);
        prev = atom;
        pending = {};
        last = Last::Atom;
      } else if (std::isupper(static_cast<unsigned char>(c))) {
        const std::size_t at = pos_;
        const int atom = organic_atom();
        attach(prev, atom, pending, at);
        prev = atom;
        pending = {};
        last = Last::Atom;
      } else {
        reject_character(c);
      }
    }

    if (!branches.empty()) fail(Kind::Syntax, text_.size(), "unclosed branch");
    if (pending.symbol) fail(Kind::Syntax, pending.position, "bond symbol without a following atom");
    if (!rings_.empty())
      fail(Kind::Syntax, rings_.begin()->second.position,
           "unclosed ring bond " + std::to_string(rings_.begin()->first));
    if (mol_.empty()) fail(Kind::Syntax, 0, "no atoms");

    check_hydrogens_and_valence();
    assign_bond_stereo();
    ValidityReport report = validate(mol_);
    if (!report.valid()) fail(Kind::Invalid, 0, report.reasons.front());
    return std::move(mol_);
  }

 private:
  using Kind = SmilesError::Kind;

  struct Pending {
    char symbol = 0;
    std::size_t position = 0;
  };
  struct OpenRing {
    int atom;
    Pending bond;
    std::size_t position;
  };

  [[noreturn]] void fail(Kind kind, std::size_t position, std::string reason) const {
    throw SmilesError(kind, position, std::move(reason));
  }

  void reject_character(char c) const {
    switch (c) {
      case ':':
        fail(Kind::Unsupported, pos_, "aromatic bond ':'");
      case '$':
        fail(Kind::Unsupported, pos_, "quadruple bond '$'");
      case '.':
        fail(Kind::Unsupported, pos_, "disconnected components '.'");
      case '*':
        fail(Kind::Unsupported, pos_, "wildcard atom '*'");
      case 'b':
      case 'c':
      case 'n':
      case 'o':
      case 'p':
      case 's':
        fail(Kind::Unsupported, pos_, std::string("aromatic atom '") + c + "'");
      default:
        fail(Kind::Syntax, pos_, std::string("unexpected character '") + c + "'");
    }
  }

  int ring_number() {
    if (text_[pos_] == '%') {
      if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2])))
        fail(Kind::Syntax, pos_, "'%' must be followed by two digits");
      const int value = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
      pos_ += 3;
      return value;
    }
    return text_[pos_++] - '0';
  }

  void add_atom(Element e, AtomParity parity, int explicit_h, std::size_t at) {
    mol_.add_atom({e, parity});
    explicit_h_.push_back(explicit_h);
    atom_pos_.push_back(at);
  }

  int organic_atom() {
    const std::size_t at = pos_;
    std::string sym(1, text_[pos_]);
    if ((sym == "C" || sym == "B") && pos_ + 1 < text_.size() &&
        ((sym == "C" && text_[pos_ + 1] == 'l') || (sym == "B" && text_[pos_ + 1] == 'r'))) {
      sym += text_[pos_ + 1];
    }
    const auto e = element_from_symbol(sym);
    if (!e) fail(Kind::Syntax, at, "'" + sym + "' is not an organic-subset atom");
    pos_ += sym.size();
    add_atom(*e, AtomParity::None, -1, at);
    return mol_.atom_count() - 1;
  }

  int bracket_atom() {
    const std::size_t at = pos_;
    ++pos_;
    auto peek = [&]() -> char { return pos_ < text_.size() ? text_[pos_] : '\0'; };
    if (std::isdigit(static_cast<unsigned char>(peek()))) fail(Kind::Unsupported, pos_, "isotope label");
    if (peek() == '*') fail(Kind::Unsupported, pos_, "wildcard atom '*'");
    if (std::islower(static_cast<unsigned char>(peek())))
      fail(Kind::Unsupported, pos_, std::string("aromatic atom '") + peek() + "'");
    if (!std::isupper(static_cast<unsigned char>(peek()))) fail(Kind::Syntax, pos_, "expected element symbol");
    std::string sym(1, text_[pos_++]);
    if (std::islower(static_cast<unsigned char>(peek()))) sym += text_[pos_++];
    if (sym == "H") fail(Kind::Unsupported, at + 1, "explicit hydrogen atom");
    const auto e = element_from_symbol(sym);
    if (!e) fail(Kind::Unsupported, at + 1, "element '" + sym + "'");

    AtomParity parity = AtomParity::None;
    if (peek() == '@') {
      ++pos_;
      parity = AtomParity::CounterClockwise;
      if (peek() == '@') {
        ++pos_;
        parity = AtomParity::Clockwise;
      }
      const std::string_view rest = text_.substr(pos_);
      for (std::string_view cls : {"TH", "AL", "SP", "TB", "OH"}) {
        if (rest.starts_with(cls)) fail(Kind::Unsupported, pos_, "extended chirality class");
      }
    }
    int hydrogens = 0;
    if (peek() == 'H') {
      ++pos_;
      hydrogens = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) hydrogens = text_[pos_++] - '0';
    }
    if (peek() == '+' || peek() == '-') fail(Kind::Unsupported, pos_, "formal charge");
    if (peek() == ':') fail(Kind::Unsupported, pos_, "atom class");
    if (peek() != ']') fail(Kind::Syntax, pos_, "expected ']'");
    ++pos_;
    add_atom(*e, parity, hydrogens, at);
    return mol_.atom_count() - 1;
  }

  void record_bond(int a, int b, BondOrder order, char dir, int first, std::size_t position) {
    mol_.add_bond({a, b, order, BondStereo::None});
    marks_.push_back({(dir == '/' || dir == '\\') ? dir : char{0}, first, position});
  }

  void attach(int prev, int atom, const Pending& pending, std::size_t atom_at) {
    if (prev < 0) return;
    record_bond(prev, atom, order_of_symbol(pending.symbol), pending.symbol, prev,
                pending.symbol ? pending.position : atom_at);
  }

  void close_or_open_ring(int atom, int number, const Pending& pending, std::size_t at) {
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_.emplace(number, OpenRing{atom, pending, at});
      return;
    }
    const OpenRing open = it->second;
    rings_.erase(it);
    if (open.atom == atom) fail(Kind::Syntax, at, "ring closure bonds an atom to itself");
    if (mol_.find_bond(open.atom, atom)) fail(Kind::Syntax, at, "ring closure duplicates an existing bond");
    const char s1 = open.bond.symbol;
    const char s2 = pending.symbol;
    if (s1 && s2 && order_of_symbol(s1) != order_of_symbol(s2))
      fail(Kind::Syntax, at, "conflicting ring-closure bond orders");
    const BondOrder order = order_of_symbol(s1 ? s1 : s2);
    if (s1 == '/' || s1 == '\\') {
      record_bond(open.atom, atom, order, s1, open.atom, open.bond.position);
    } else if (s2 == '/' || s2 == '\\') {
      record_bond(open.atom, atom, order, s2, atom, pending.position);
    } else {
      record_bond(open.atom, atom, order, 0, open.atom, open.position);
    }
  }

  void check_hydrogens_and_valence() {
    for (int a = 0; a < mol_.atom_count(); ++a) {
      const std::size_t at = atom_pos_[static_cast<std::size_t>(a)];
      const int implicit = mol_.implicit_hydrogens(a);
      if (implicit < 0)
        fail(Kind::Invalid, at,
             "atom " + std::to_string(a) + " exceeds valence " +
                 std::to_string(valence_cap(mol_.atom(a).element)));
      const int explicit_h = explicit_h_[static_cast<std::size_t>(a)];
      if (explicit_h >= 0 && explicit_h != implicit)
        fail(Kind::Unsupported, at, "hydrogen count implies a radical or non-standard valence");
      if (mol_.atom(a).parity != AtomParity::None && mol_.degree(a) < 3)
        fail(Kind::Invalid, at, "chirality on an atom with fewer than three heavy neighbours");
    }
  }

  void assign_bond_stereo() {
    const auto ring_bonds = ring_bond_mask(mol_);
    for (int i = 0; i < mol_.bond_count(); ++i) {
      if (!bond_stereo_placeable(mol_, i, ring_bonds)) continue;
      const Bond& b = mol_.bond(i);
      const int side_u = first_marked_neighbor_bond(mol_, marks_, i, b.begin);
      const int side_v = first_marked_neighbor_bond(mol_, marks_, i, b.end);
      if (side_u < 0 || side_v < 0) continue;
      const auto& mu = marks_[static_cast<std::size_t>(side_u)];
      const auto& mv = marks_[static_cast<std::size_t>(side_v)];
      const int du = dir_bit(mu.dir) ^ (mu.first == b.begin ? 1 : 0);
      const int dv = dir_bit(mv.dir) ^ (mv.first == b.end ? 1 : 0);
      mol_.bond(i).stereo = du == dv ? BondStereo::Cis : BondStereo::Trans;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Molecule mol_;
  std::vector<DirectionMark> marks_;
  std::vector<int> explicit_h_;
  std::vector<std::size_t> atom_pos_;
  std::map<int, OpenRing> rings_;
};

}  // namespace detail

// Reads the supported SMILES subset: organic-subset and uncharged bracket
// atoms, bonds - = # / \, branches, ring closures (digits and %nn) and
// @/@@ parity. Throws SmilesError.
inline Molecule parse_smiles(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  return detail::SmilesParser(text).parse();
}

struct WrittenSmiles {
  std::string text;
  // atom_order[k] is the index (in the written molecule) of the k-th atom in
  // the text, i.e. the atom that receives index k when the text is parsed.
  std::vector<int> atom_order;
};

namespace detail {

class SmilesWriter {
 public:
  explicit SmilesWriter(const Molecule& m) : m_(m) {}

  WrittenSmiles write() {
    WrittenSmiles out;
    const int n = m_.atom_count();
    if (n == 0) return out;
    const std::size_t nb = static_cast<std::size_t>(m_.bond_count());

    const auto canon = canonical_form(m_);
    std::vector<int> rank(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) rank[static_cast<std::size_t>(canon.order[static_cast<std::size_t>(k)])] = k;
    adj_ = m_.adjacency();
    for (auto& list : adj_) {
      std::sort(list.begin(), list.end(), [&](const Neighbor& a, const Neighbor& b) {
        return rank[static_cast<std::size_t>(a.atom)] < rank[static_cast<std::size_t>(b.atom)];
      });
    }

    children_.assign(static_cast<std::size_t>(n), {});
    ring_at_.assign(static_cast<std::size_t>(n), {});
    first_.assign(nb, -1);
    ordinal_.assign(nb, -1);
    dir_.assign(nb, -1);
    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    std::vector<char> seen_bond(nb, 0);

    std::function<void(int, int)> dfs = [&](int u, int parent_bond) {
      visited[static_cast<std::size_t>(u)] = 1;
      for (const Neighbor& nbr : adj_[static_cast<std::size_t>(u)]) {
        const auto b = static_cast<std::size_t>(nbr.bond);
        if (nbr.bond == parent_bond || seen_bond[b]) continue;
        seen_bond[b] = 1;
        if (visited[static_cast<std::size_t>(nbr.atom)]) {
          // Back edge to an ancestor: opened at the ancestor, closed here.
          first_[b] = nbr.atom;
          ring_at_[static_cast<std::size_t>(nbr.atom)].push_back(nbr.bond);
          ring_at_[static_cast<std::size_t>(u)].push_back(nbr.bond);
        } else {
          first_[b] = u;
          children_[static_cast<std::size_t>(u)].push_back(nbr);
          dfs(nbr.atom, nbr.bond);
        }
      }
    };
    dfs(canon.order[0], -1);

    emit(canon.order[0]);
    assign_directions();

    for (const Token& t : tokens_) render(t, out.text);
    out.atom_order = std::move(emitted_);
    return out;
  }

 private:
  struct Token {
    enum class Type { Atom, Bond, Digit, Open, Close } type;
    int value;
  };

  void emit(int u) {
    tokens_.push_back({Token::Type::Atom, u});
    emitted_.push_back(u);
    std::vector<int> freed;
    for (int b : ring_at_[static_cast<std::size_t>(u)]) {
      const auto bi = static_cast<std::size_t>(b);
      if (first_[bi] == u) {
        ordinal_[bi] = next_ordinal_++;
        tokens_.push_back({Token::Type::Bond, b});
        int digit = 1;
        while (digit_used_[static_cast<std::size_t>(digit)]) ++digit;
        digit_used_[static_cast<std::size_t>(digit)] = true;
        ring_digit_[b] = digit;
        tokens_.push_back({Token::Type::Digit, digit});
      } else {
        tokens_.push_back({Token::Type::Digit, ring_digit_[b]});
        freed.push_back(ring_digit_[b]);
      }
    }
    for (int d : freed) digit_used_[static_cast<std::size_t>(d)] = false;
    const auto& kids = children_[static_cast<std::size_t>(u)];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const bool last = i + 1 == kids.size();
      if (!last) tokens_.push_back({Token::Type::Open, 0});
      ordinal_[static_cast<std::size_t>(kids[i].bond)] = next_ordinal_++;
      tokens_.push_back({Token::Type::Bond, kids[i].bond});
      emit(kids[i].atom);
      if (!last) tokens_.push_back({Token::Type::Close, 0});
    }
  }

  // For a stereo double bond, the anchor on atom x is the single bond at x
  // written first; the reader looks at the same bond.
  int anchor(int db, int x) const {
    int best = -1;
    for (int j = 0; j < m_.bond_count(); ++j) {
      if (j == db) continue;
      const Bond& b = m_.bond(j);
      if (!b.touches(x) || b.order != BondOrder::Single) continue;
      if (best < 0 || ordinal_[static_cast<std::size_t>(j)] < ordinal_[static_cast<std::size_t>(best)]) best = j;
    }
    return best;
  }

  // Chooses / or \ for each anchor bond so that every stereo double bond reads
  // back with its flag. Constraints form a forest because flagged double bonds
  // are acyclic, so propagation never conflicts.
  void assign_directions() {
    struct Constraint {
      int a, b, parity;
    };
    std::vector<Constraint> constraints;
    for (int i = 0; i < m_.bond_count(); ++i) {
      const Bond& db = m_.bond(i);
      if (db.stereo == BondStereo::None) continue;
      const int a = anchor(i, db.begin);
      const int c = anchor(i, db.end);
      if (a < 0 || c < 0) continue;
      const int pu = first_[static_cast<std::size_t>(a)] == db.begin ? 1 : 0;
      const int pv = first_[static_cast<std::size_t>(c)] == db.end ? 1 : 0;
      constraints.push_back({a, c, (db.stereo == BondStereo::Trans ? 1 : 0) ^ pu ^ pv});
    }
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Constraint& k : constraints) {
        int& da = dir_[static_cast<std::size_t>(k.a)];
        int& dc = dir_[static_cast<std::size_t>(k.b)];
        if (da < 0 && dc < 0) continue;
        if (da >= 0 && dc < 0) {
          dc = da ^ k.parity;
          changed = true;
        } else if (dc >= 0 && da < 0) {
          da = dc ^ k.parity;
          changed = true;
        } else if ((da ^ dc) != k.parity) {
          throw std::logic_error("inconsistent cis/trans constraints while writing SMILES");
        }
      }
      if (!changed) {
        // Seed the unassigned anchor written first with '/'.
        int seed = -1;
        for (const Constraint& k : constraints) {
          for (int x : {k.a, k.b}) {
            if (dir_[static_cast<std::size_t>(x)] >= 0) continue;
            if (seed < 0 || ordinal_[static_cast<std::size_t>(x)] < ordinal_[static_cast<std::size_t>(seed)]) seed = x;
          }
        }
        if (seed >= 0) {
          dir_[static_cast<std::size_t>(seed)] = 0;
          changed = true;
        }
      }
    }
  }

  void render(const Token& t, std::string& out) const {
    switch (t.type) {
      case Token::Type::Atom: {
        const Atom& a = m_.atom(t.value);
        if (a.parity == AtomParity::None) {
          out += symbol(a.element);
          return;
        }
        out += '[';
        out += symbol(a.element);
        out += a.parity == AtomParity::CounterClockwise ? "@" : "@@";
        const int h = m_.implicit_hydrogens(t.value);
        if (h > 0) out += 'H';
        if (h > 1) out += std::to_string(h);
        out += ']';
        return;
      }
      case Token::Type::Bond: {
        const Bond& b = m_.bond(t.value);
        if (b.order == BondOrder::Double) out += '=';
        if (b.order == BondOrder::Triple) out += '#';
        const int d = dir_[static_cast<std::size_t>(t.value)];
        if (b.order == BondOrder::Single && d >= 0) out += d ? '\\' : '/';
        return;
      }
      case Token::Type::Digit:
        if (t.value < 10) {
          out += static_cast<char>('0' + t.value);
        } else {
          out += '%';
          out += std::to_string(t.value);
        }
        return;
      case Token::Type::Open:
        out += '(';
        return;
      case Token::Type::Close:
        out += ')';
        return;
    }
  }

  const Molecule& m_;
  Adjacency adj_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<int>> ring_at_;
  std::vector<int> first_;
  std::vector<int> ordinal_;
  std::vector<int> dir_;
  std::map<int, int> ring_digit_;
  std::vector<bool> digit_used_ = std::vector<bool>(100, false);
  int next_ordinal_ = 0;
  std::vector<Token> tokens_;
  std::vector<int> emitted_;
};

}  // namespace detail

// Canonical SMILES plus the atom order of the text.
inline WrittenSmiles write_smiles_ordered(const Molecule& m) { return detail::SmilesWriter(m).write(); }

inline std::string write_smiles(const Molecule& m) { return write_smiles_ordered(m).text; }

}  // namespace editopt

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <future>
#include <iostream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "editopt/canonical.hpp"
#include "editopt/edits.hpp"
#include "editopt/properties.hpp"
#include "editopt/smiles.hpp"

namespace editopt {

struct LabeledMolecule {
  Molecule molecule;
  double value = 0.0;
};

struct EditResponseSample {
  Molecule from;
  Molecule to;
  EditAction edit;
  EditDescriptor descriptor;
  double delta = 0.0;
};

namespace detail {

struct TargetProfile {
  int atoms = 0;
  int bonds = 0;
  int stereo = 0;
  std::array<int, kElementCount> elements{};
};

inline int stereo_label_count(const Molecule& m) {
  int n = 0;
  for (const Atom& a : m.atoms()) n += a.parity != AtomParity::None;
  for (const Bond& b : m.bonds()) n += b.stereo != BondStereo::None;
  return n;
}

inline TargetProfile profile(const Molecule& m) {
  TargetProfile p;
  p.atoms = m.atom_count();
  p.bonds = m.bond_count();
  p.stereo = stereo_label_count(m);
  for (const Atom& a : m.atoms()) ++p.elements[static_cast<std::size_t>(element_index(a.element))];
  return p;
}

inline int matched_elements(const TargetProfile& a, const TargetProfile& b) {
  int matched = 0;
  for (std::size_t e = 0; e < a.elements.size(); ++e) matched += std::min(a.elements[e], b.elements[e]);
  return matched;
}

// Lower bound on the number of edits still needed. Each edit changes at most
// one element slot, or at most one stereo label, or at most two bonds.
inline int remaining_lower_bound(const TargetProfile& s, const TargetProfile& t) {
  const int elements = t.atoms - matched_elements(s, t);
  const int stereo = std::abs(t.stereo - s.stereo);
  const int bonds = (std::abs(t.bonds - s.bonds) + 1) / 2;
  return std::max(elements + stereo, bonds);
}

}  // namespace detail

// Shortest feasible edit sequence from `from` to a molecule isomorphic to
// `to`, or nullopt when none has length <= max_len. Every intermediate is
// valid. Among shortest sequences the first in enumeration order wins.
inline std::optional<std::vector<EditAction>> decompose(const Molecule& from, const Molecule& to, int max_len) {
  const std::string target = canonical_key(to);
  if (canonical_key(from) == target) return std::vector<EditAction>{};
  if (from.atom_count() > to.atom_count()) return std::nullopt;
  const detail::TargetProfile goal = detail::profile(to);
  if (detail::remaining_lower_bound(detail::profile(from), goal) > max_len) return std::nullopt;

  struct Node {
    Molecule molecule;
    int parent;
    std::optional<EditAction> action;
  };
  std::vector<Node> nodes{{from, -1, std::nullopt}};
  std::unordered_set<std::string> seen{canonical_key(from)};
  std::vector<int> level{0};
  auto path_to = [&](int idx, const EditAction& last) {
    std::vector<EditAction> out{last};
    for (int i = idx; nodes[static_cast<std::size_t>(i)].parent >= 0; i = nodes[static_cast<std::size_t>(i)].parent)
      out.push_back(*nodes[static_cast<std::size_t>(i)].action);
    std::reverse(out.begin(), out.end());
    return out;
  };
  for (int depth = 0; depth < max_len && !level.empty(); ++depth) {
    std::vector<int> next;
    for (int idx : level) {
      // Copy: `nodes` grows while we iterate.
      const Molecule current = nodes[static_cast<std::size_t>(idx)].molecule;
      for (Candidate& c : feasible_actions(current)) {
        if (c.key == target) return path_to(idx, c.action);
        if (c.result.atom_count() > goal.atoms) continue;
        if (depth + 1 + detail::remaining_lower_bound(detail::profile(c.result), goal) > max_len) continue;
        if (!seen.insert(c.key).second) continue;
        nodes.push_back({std::move(c.result), idx, std::move(c.action)});
        next.push_back(static_cast<int>(nodes.size()) - 1);
      }
    }
    level = std::move(next);
  }
  return std::nullopt;
}

struct MinedPair {
  int from = 0;
  int to = 0;
  std::vector<EditAction> edits;
};

namespace detail {

inline bool prefilter(const TargetProfile& a, const TargetProfile& b, int max_edit_distance) {
  if (std::abs(a.atoms - b.atoms) > max_edit_distance) return false;
  const int distance = std::max(a.atoms, b.atoms) - matched_elements(a, b);
  return distance <= max_edit_distance;
}

}  // namespace detail

// Directional pairs (i, j) decomposable within max_edit_distance edits, in
// (i, j) order, with their edit sequences. `jobs` > 1 decomposes candidate
// pairs concurrently; the result does not depend on it.
inline std::vector<MinedPair> mine_decomposed(const std::vector<LabeledMolecule>& set, int max_edit_distance,
                                              std::size_t limit, int jobs = 1) {
  if (max_edit_distance < 1) throw std::invalid_argument("max_edit_distance must be at least 1");
  std::vector<detail::TargetProfile> profiles;
  std::vector<std::string> keys;
  for (const LabeledMolecule& lm : set) {
    profiles.push_back(detail::profile(lm.molecule));
    keys.push_back(canonical_key(lm.molecule));
  }
  std::vector<std::pair<int, int>> candidates;
  const int n = static_cast<int>(set.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || keys[static_cast<std::size_t>(i)] == keys[static_cast<std::size_t>(j)]) continue;
      if (!detail::prefilter(profiles[static_cast<std::size_t>(i)], profiles[static_cast<std::size_t>(j)],
                             max_edit_distance))
        continue;
      candidates.emplace_back(i, j);
    }
  }

  auto attempt = [&](std::pair<int, int> p) {
    return decompose(set[static_cast<std::size_t>(p.first)].molecule, set[static_cast<std::size_t>(p.second)].molecule,
                     max_edit_distance);
  };
  std::vector<MinedPair> out;
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t start = 0; start < candidates.size() && out.size() < limit; start += chunk) {
    const std::size_t stop = std::min(candidates.size(), start + chunk);
    std::vector<std::optional<std::vector<EditAction>>> results(stop - start);
    if (jobs <= 1) {
      for (std::size_t k = start; k < stop; ++k) results[k - start] = attempt(candidates[k]);
    } else {
      std::vector<std::future<std::optional<std::vector<EditAction>>>> futures;
      for (std::size_t k = start; k < stop; ++k)
        futures.push_back(std::async(std::launch::async, attempt, candidates[k]));
      for (std::size_t k = start; k < stop; ++k) results[k - start] = futures[k - start].get();
    }
    for (std::size_t k = start; k < stop && out.size() < limit; ++k) {
      if (results[k - start]) out.push_back({candidates[k].first, candidates[k].second, std::move(*results[k - start])});
    }
  }
  return out;
}

inline std::vector<std::pair<int, int>> mine_pairs(const std::vector<LabeledMolecule>& set, int max_edit_distance,
                                                   std::size_t limit, int jobs = 1) {
  std::vector<std::pair<int, int>> out;
  for (const MinedPair& p : mine_decomposed(set, max_edit_distance, limit, jobs)) out.emplace_back(p.from, p.to);
  return out;
}

struct Dataset {
  std::vector<EditResponseSample> samples;
  // Index of the first sample of each emitted chain, plus a final sentinel.
  std::vector<std::size_t> chain_starts;
  std::vector<MinedPair> pairs;
  std::size_t skipped = 0;
};

// One sample per decomposition step; every molecule on a chain is labelled by
// `oracle`. A pair whose labelling throws is skipped with a warning.
inline Dataset build_dataset(const std::vector<LabeledMolecule>& set, const PropertyOracle& oracle,
                             int max_edit_distance, std::size_t limit, int jobs = 1,
                             std::ostream& warnings = std::cerr) {
  Dataset data;
  for (MinedPair& pair : mine_decomposed(set, max_edit_distance, limit, oracle.concurrent ? jobs : 1)) {
    std::vector<EditResponseSample> chain;
    try {
      Molecule current = set[static_cast<std::size_t>(pair.from)].molecule;
      double value = oracle(current);
      for (const EditAction& edit : pair.edits) {
        Molecule next = apply(current, edit);
        const double next_value = oracle(next);
        chain.push_back({current, next, edit, describe(current, edit), next_value - value});
        current = std::move(next);
        value = next_value;
      }
    } catch (const std::exception& e) {
      warnings << "warning: skipping pair (" << pair.from << ", " << pair.to << "): " << e.what() << '\n';
      ++data.skipped;
      continue;
    }
    data.chain_starts.push_back(data.samples.size());
    for (EditResponseSample& s : chain) data.samples.push_back(std::move(s));
    data.pairs.push_back(std::move(pair));
  }
  data.chain_starts.push_back(data.samples.size());
  return data;
}

// Renames edit sites into the atom numbering of a written SMILES text.
inline EditAction edit_in_text_order(const EditAction& edit, const WrittenSmiles& written) {
  std::vector<int> mapping(written.atom_order.size());
  for (std::size_t k = 0; k < written.atom_order.size(); ++k)
    mapping[static_cast<std::size_t>(written.atom_order[k])] = static_cast<int>(k);
  return edit.relabeled(mapping);
}

// {"from", "to", "edit", "descriptor", "delta"}. Edit sites index the atoms
// of the "from" SMILES in text order.
inline nlohmann::json to_json(const EditResponseSample& s) {
  const WrittenSmiles from = write_smiles_ordered(s.from);
  return {{"from", from.text},
          {"to", write_smiles(s.to)},
          {"edit", to_json(edit_in_text_order(s.edit, from))},
          {"descriptor", s.descriptor.values},
          {"delta", s.delta}};
}

inline EditResponseSample sample_from_json(const nlohmann::json& j) {
  EditResponseSample s{parse_smiles(j.at("from").get<std::string>()), parse_smiles(j.at("to").get<std::string>()),
                       edit_from_json(j.at("edit")), {}, j.at("delta").get<double>()};
  const auto values = j.at("descriptor").get<std::vector<double>>();
  if (values.size() != EditDescriptor::kSize) throw std::invalid_argument("descriptor must have 15 entries");
  std::copy(values.begin(), values.end(), s.descriptor.values.begin());
  return s;
}

struct LineError {
  std::size_t line = 0;
  std::string message;
};

struct LabeledFile {
  std::vector<LabeledMolecule> molecules;
  std::vector<std::size_t> lines;
  std::vector<LineError> errors;
};

// "SMILES<TAB>value" per line; blank lines and '#' comments are skipped.
inline LabeledFile read_labeled(std::istream& in) {
  LabeledFile out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      out.errors.push_back({number, "expected SMILES<TAB>value"});
      continue;
    }
    try {
      Molecule m = parse_smiles(line.substr(0, tab));
      std::size_t used = 0;
      const std::string field = line.substr(tab + 1);
      const double value = std::stod(field, &used);
      if (field.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(value))
        throw std::invalid_argument("bad property value");
      out.molecules.push_back({std::move(m), value});
      out.lines.push_back(number);
    } catch (const SmilesError& e) {
      out.errors.push_back({number, e.what()});
    } catch (const std::exception&) {
      out.errors.push_back({number, "bad property value '" + line.substr(tab + 1) + "'"});
    }
  }
  return out;
}

}  // namespace editopt

#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "editopt/canonical.hpp"
#include "editopt/edits.hpp"
#include "editopt/pairminer.hpp"
#include "editopt/properties.hpp"
#include "editopt/rng.hpp"

namespace editopt {

// Predicts the single-step property response of each candidate edit.
class EditScorer {
 public:
  virtual ~EditScorer() = default;
  virtual std::string name() const = 0;
  // One prediction per candidate, in candidate order.
  virtual std::vector<double> score_batch(const Molecule& from, std::span<const Candidate> candidates) const = 0;
};

class ExactOracleScorer final : public EditScorer {
 public:
  explicit ExactOracleScorer(PropertyOracle oracle) : oracle_(std::move(oracle)) {}

  std::string name() const override { return "exact:" + oracle_.name; }

  std::vector<double> score_batch(const Molecule& from, std::span<const Candidate> candidates) const override {
    std::vector<double> out;
    out.reserve(candidates.size());
    if (candidates.empty()) return out;
    const double base = oracle_(from);
    for (const Candidate& c : candidates) out.push_back(oracle_(c.result) - base);
    return out;
  }

  const PropertyOracle& oracle() const { return oracle_; }

 private:
  PropertyOracle oracle_;
};

inline std::shared_ptr<const EditScorer> exact_oracle_scorer(PropertyOracle oracle) {
  return std::make_shared<ExactOracleScorer>(std::move(oracle));
}

// Element used to refine a table entry: the incoming element for replace/add,
// otherwise the element of the first site atom.
inline Element context_element(const Molecule& from, const EditAction& a) {
  if (a.kind() == EditKind::AtomReplace || a.kind() == EditKind::AtomAdd) return a.element();
  return from.atom(a.sites().front()).element;
}

// Additive per-edit contributions keyed "Op" or "Op:Element". A refined key
// takes precedence over the bare op key; missing entries contribute 0.
class ContributionTable {
 public:
  ContributionTable() = default;
  explicit ContributionTable(std::map<std::string, double> entries) : entries_(std::move(entries)) {
    for (const auto& [key, value] : entries_) check_key(key);
  }

  static std::string key(EditKind k) { return std::string(to_string(k)); }
  static std::string key(EditKind k, Element e) { return key(k) + ":" + std::string(symbol(e)); }

  double lookup(EditKind k, Element context) const {
    if (auto it = entries_.find(key(k, context)); it != entries_.end()) return it->second;
    if (auto it = entries_.find(key(k)); it != entries_.end()) return it->second;
    return 0.0;
  }

  const std::map<std::string, double>& entries() const { return entries_; }

  static ContributionTable from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("contribution table must be a JSON object");
    std::map<std::string, double> entries;
    for (const auto& [k, v] : j.items()) {
      if (!v.is_number()) throw std::invalid_argument("contribution '" + k + "' is not a number");
      entries[k] = v.get<double>();
    }
    return ContributionTable(std::move(entries));
  }

  nlohmann::json to_json() const { return nlohmann::json(entries_); }

 private:
  static void check_key(const std::string& k) {
    const auto colon = k.find(':');
    const std::string op = k.substr(0, colon);
    if (!edit_kind_from_string(op)) throw std::invalid_argument("unknown edit op in table key '" + k + "'");
    if (colon != std::string::npos && !element_from_symbol(k.substr(colon + 1)))
      throw std::invalid_argument("unknown element in table key '" + k + "'");
  }

  std::map<std::string, double> entries_;
};

class GroupContributionScorer final : public EditScorer {
 public:
  explicit GroupContributionScorer(ContributionTable table) : table_(std::move(table)) {}

  std::string name() const override { return "group_contribution"; }

  std::vector<double> score_batch(const Molecule& from, std::span<const Candidate> candidates) const override {
    std::vector<double> out;
    out.reserve(candidates.size());
    for (const Candidate& c : candidates) out.push_back(score(from, c.action));
    return out;
  }

  double score(const Molecule& from, const EditAction& a) const {
    return table_.lookup(a.kind(), context_element(from, a));
  }

  const ContributionTable& table() const { return table_; }

 private:
  ContributionTable table_;
};

inline std::shared_ptr<const EditScorer> group_contribution_scorer(ContributionTable table) {
  return std::make_shared<GroupContributionScorer>(std::move(table));
}

struct ContributionFit {
  ContributionTable table;
  std::size_t train_size = 0;
  std::size_t holdout_size = 0;
  double train_mae = 0.0;
  double holdout_mae = 0.0;
};

// Least-squares fit of a table over one-hot "Op:Element" groups, which reduces
// to per-group means. Bare "Op" entries hold the op mean as a fallback. A
// seeded fraction of samples is held out to report MAE.
inline ContributionFit fit_group_contribution(std::span<const EditResponseSample> samples,
                                              double holdout_fraction = 0.2, std::uint64_t seed = 0) {
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
    throw std::invalid_argument("holdout_fraction must be in [0, 1)");
  std::vector<bool> held(samples.size(), false);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double u = static_cast<double>(hash_combine(seed, i) >> 11) * 0x1.0p-53;
    held[i] = u < holdout_fraction;
  }
  std::map<std::string, std::pair<double, std::size_t>> sums;
  ContributionFit fit;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (held[i]) continue;
    const EditResponseSample& s = samples[i];
    const EditKind k = s.edit.kind();
    for (const std::string& key : {ContributionTable::key(k), ContributionTable::key(k, context_element(s.from, s.edit))}) {
      sums[key].first += s.delta;
      sums[key].second += 1;
    }
    ++fit.train_size;
  }
  std::map<std::string, double> entries;
  for (const auto& [key, acc] : sums) entries[key] = acc.first / static_cast<double>(acc.second);
  fit.table = ContributionTable(std::move(entries));

  const GroupContributionScorer scorer(fit.table);
  double train_err = 0.0, holdout_err = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double err = std::abs(scorer.score(samples[i].from, samples[i].edit) - samples[i].delta);
    if (held[i]) {
      holdout_err += err;
      ++fit.holdout_size;
    } else {
      train_err += err;
    }
  }
  fit.train_mae = fit.train_size ? train_err / static_cast<double>(fit.train_size) : 0.0;
  fit.holdout_mae = fit.holdout_size ? holdout_err / static_cast<double>(fit.holdout_size) : 0.0;
  return fit;
}

// Base scores plus N(0, sigma^2) noise. The draw for a candidate is keyed by
// (seed, canonical key of `from`, canonical key of the candidate), so it does
// not depend on batching or call order.
class NoisyScorer final : public EditScorer {
 public:
  NoisyScorer(std::shared_ptr<const EditScorer> base, double sigma, std::uint64_t seed)
      : base_(std::move(base)), sigma_(sigma), seed_(seed) {
    if (!base_) throw std::invalid_argument("noisy scorer needs a base scorer");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  }

  std::string name() const override { return "noisy:" + base_->name(); }

  std::vector<double> score_batch(const Molecule& from, std::span<const Candidate> candidates) const override {
    std::vector<double> out = base_->score_batch(from, candidates);
    if (sigma_ == 0.0) return out;
    const std::uint64_t from_hash = hash_combine(seed_, fnv1a64(canonical_key(from)));
    for (std::size_t i = 0; i < out.size(); ++i) {
      SplitMix64 rng(hash_combine(from_hash, fnv1a64(candidates[i].key)));
      out[i] += sigma_ * rng.normal();
    }
    return out;
  }

 private:
  std::shared_ptr<const EditScorer> base_;
  double sigma_;
  std::uint64_t seed_;
};

inline std::shared_ptr<const EditScorer> noisy_scorer(std::shared_ptr<const EditScorer> base, double sigma,
                                                      std::uint64_t seed) {
  return std::make_shared<NoisyScorer>(std::move(base), sigma, seed);
}

}  // namespace editopt

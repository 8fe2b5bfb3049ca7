#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "editopt/metrics.hpp"
#include "editopt/pairminer.hpp"
#include "editopt/properties.hpp"
#include "editopt/scorer.hpp"
#include "editopt/search.hpp"
#include "editopt/smiles.hpp"

namespace editopt::cli {

enum ExitCode : int { kOk = 0, kIoError = 1, kPartial = 2, kConfigError = 64 };

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  SearchConfig search;
  std::string property = "wiener_index";
  std::string scorer = "exact";
  int direction = 1;
  std::string input;
  std::string output = ".";
  int jobs = 1;
  // Group-contribution table for scorer "group".
  std::string table;
  double noise_sigma = 0.3;
  int max_edit_distance = 2;
  std::size_t limit = 100000;

  void validate() const {
    search.validate();
    find_property(property);
    if (scorer != "exact" && scorer != "group" && scorer != "noisy")
      throw ConfigError("scorer must be one of exact, group, noisy");
    if (scorer == "group" && table.empty()) throw ConfigError("scorer 'group' needs a table (--table)");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
    if (max_edit_distance < 1) throw ConfigError("max_edit_distance must be at least 1");
  }
};

namespace detail {

template <class T>
T typed(const std::string& key, const nlohmann::json& v) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw std::invalid_argument("");
      if constexpr (std::is_unsigned_v<T>)
        if (v.get<long long>() < 0) throw std::invalid_argument("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw std::invalid_argument("");
    } else {
      if (!v.is_string()) throw std::invalid_argument("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("bad value for '" + key + "': " + v.dump());
  }
}

}  // namespace detail

inline void apply_key(RunConfig& c, const std::string& key, const nlohmann::json& v) {
  using detail::typed;
  if (key == "num_simulations") c.search.num_simulations = typed<int>(key, v);
  else if (key == "exploration_weight") c.search.exploration_weight = typed<double>(key, v);
  else if (key == "max_depth") c.search.max_depth = typed<int>(key, v);
  else if (key == "pruning_patience") c.search.pruning_patience = typed<int>(key, v);
  else if (key == "max_branching") c.search.max_branching = typed<int>(key, v);
  else if (key == "seed") c.search.seed = typed<std::uint64_t>(key, v);
  else if (key == "no_prior") c.search.use_prior = !typed<bool>(key, v);
  else if (key == "no_leaf_value") c.search.use_leaf_value = !typed<bool>(key, v);
  else if (key == "random_topk")
    c.search.expansion_ranking = typed<bool>(key, v) ? ExpansionRanking::Random : ExpansionRanking::Scorer;
  else if (key == "strategy") {
    const auto s = typed<std::string>(key, v);
    if (s == "mcts") c.search.strategy = Strategy::Mcts;
    else if (s == "bfs") c.search.strategy = Strategy::Bfs;
    else throw ConfigError("strategy must be mcts or bfs, got '" + s + "'");
  } else if (key == "direction") {
    const auto s = typed<std::string>(key, v);
    if (s == "increase") c.direction = 1;
    else if (s == "decrease") c.direction = -1;
    else throw ConfigError("direction must be increase or decrease, got '" + s + "'");
  } else if (key == "property") c.property = typed<std::string>(key, v);
  else if (key == "scorer") c.scorer = typed<std::string>(key, v);
  else if (key == "input") c.input = typed<std::string>(key, v);
  else if (key == "output") c.output = typed<std::string>(key, v);
  else if (key == "jobs") c.jobs = typed<int>(key, v);
  else if (key == "table") c.table = typed<std::string>(key, v);
  else if (key == "noise_sigma") c.noise_sigma = typed<double>(key, v);
  else if (key == "max_edit_distance") c.max_edit_distance = typed<int>(key, v);
  else if (key == "limit") c.limit = typed<std::size_t>(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
  for (const auto& [key, value] : j.items()) apply_key(c, key, value);
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

// Defaults, then the config file, then flags.
inline RunConfig resolve(const std::string& config_path, const nlohmann::json& flags) {
  RunConfig c;
  if (!config_path.empty()) apply_json(c, load_json_file(config_path));
  apply_json(c, flags);
  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

// Binds a --flag to a config key; values given on the command line land in `flags`.
template <class T>
void add_setting(CLI::App& app, nlohmann::json& flags, const std::string& key, const std::string& help) {
  app.add_option_function<T>(flag_name(key), [&flags, key](const T& v) { flags[key] = v; }, help);
}

inline void add_switch(CLI::App& app, nlohmann::json& flags, const std::string& key, const std::string& help) {
  app.add_flag_callback(flag_name(key), [&flags, key] { flags[key] = true; }, help);
}

// The shared scorer for a run; "noisy" is wrapped per task by task_scorer.
inline std::shared_ptr<const EditScorer> base_scorer(const RunConfig& c) {
  const PropertyOracle& oracle = find_property(c.property);
  if (c.scorer != "group") return exact_oracle_scorer(oracle);
  std::ifstream in(c.table);
  if (!in) throw IoError("cannot read table '" + c.table + "'");
  try {
    return group_contribution_scorer(ContributionTable::from_json(nlohmann::json::parse(in)));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("table '" + c.table + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("table '" + c.table + "': " + e.what());
  }
}

inline std::shared_ptr<const EditScorer> task_scorer(const RunConfig& c, std::shared_ptr<const EditScorer> base,
                                                     std::uint64_t seed) {
  return c.scorer == "noisy" ? noisy_scorer(std::move(base), c.noise_sigma, seed) : base;
}

struct StartEntry {
  std::size_t line = 0;
  std::optional<Molecule> molecule;
  std::string error;
};

// One SMILES per line; anything after the first tab or space is ignored.
inline std::vector<StartEntry> read_starts(std::istream& in) {
  std::vector<StartEntry> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto end = line.find_first_of(" \t", first);
    StartEntry e;
    e.line = number;
    try {
      e.molecule = parse_smiles(line.substr(first, end == std::string::npos ? std::string::npos : end - first));
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) throw IoError("cannot write '" + path.string() + "'");
}

inline std::string direction_name(int d) { return d > 0 ? "increase" : "decrease"; }

struct TaskOutcome {
  std::optional<SearchResult> result;
  double y_start = 0.0;
  double y_result = 0.0;
  std::string error;
};

inline int cmd_optimize(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::ifstream in(c.input);
  if (!in) {
    err << "error: cannot read input '" << c.input << "'\n";
    return kIoError;
  }
  const std::vector<StartEntry> entries = read_starts(in);
  if (entries.empty()) {
    err << "error: input '" << c.input << "' has no start molecules\n";
    return kConfigError;
  }
  const PropertyOracle& oracle = find_property(c.property);
  const auto base = base_scorer(c);
  std::vector<TaskOutcome> outcomes(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      const StartEntry& e = entries[i];
      TaskOutcome& o = outcomes[i];
      if (!e.molecule) {
        o.error = e.error;
        continue;
      }
      try {
        SearchConfig cfg = c.search;
        cfg.seed = c.search.seed + i;
        const OptimizationTask task{*e.molecule, c.property, c.direction, task_scorer(c, base, cfg.seed)};
        SearchResult r = optimize(task, cfg);
        o.y_start = oracle(r.trajectory.start);
        o.y_result = oracle(r.trajectory.selected);
        o.result = std::move(r);
      } catch (const std::exception& ex) {
        o.error = ex.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int threads = std::min<int>(c.jobs, static_cast<int>(entries.size()));
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::string lines;
  std::vector<RunRecord> records;
  nlohmann::json seconds = nlohmann::json::array();
  std::size_t failed = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const TaskOutcome& o = outcomes[i];
    if (!o.result) {
      err << "error: line " << entries[i].line << ": " << o.error << '\n';
      ++failed;
      continue;
    }
    nlohmann::json j = to_json(*o.result);
    j["line"] = entries[i].line;
    j["y_start"] = o.y_start;
    j["y_result"] = o.y_result;
    lines += j.dump() + '\n';
    records.push_back({o.result->trajectory.start, o.result->trajectory.selected, o.y_start, o.y_result,
                       o.result->stats.wall_seconds});
    seconds.push_back(o.result->stats.wall_seconds);
  }

  nlohmann::json summary{{"property", c.property},
                         {"direction", direction_name(c.direction)},
                         {"scorer", c.scorer},
                         {"strategy", c.search.strategy == Strategy::Bfs ? "bfs" : "mcts"},
                         {"tasks", entries.size()},
                         {"failed", failed}};
  nlohmann::json timing{{"wall_seconds", seconds}};
  if (!records.empty()) {
    const RunSummary s = summarize(records, c.direction);
    summary["n"] = s.n;
    summary["avg_imp"] = s.avg_imp;
    summary["suc_rate"] = s.suc_rate;
    summary["opt_mean"] = s.opt_mean;
    timing["avg_time_minutes"] = s.avg_time_minutes;
  } else {
    summary["n"] = 0;
  }

  try {
    const std::filesystem::path dir(c.output);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + c.output + "': " + ec.message());
    write_file(dir / "trajectories.jsonl", lines);
    write_file(dir / "summary.json", summary.dump(2) + '\n');
    write_file(dir / "timing.json", timing.dump(2) + '\n');
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  out << records.size() << " of " << entries.size() << " starts optimized";
  if (!records.empty()) out << ", suc_rate " << summary["suc_rate"].get<double>();
  out << '\n';
  return failed ? kPartial : kOk;
}

inline int cmd_mine(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::ifstream in(c.input);
  if (!in) {
    err << "error: cannot read input '" << c.input << "'\n";
    return kIoError;
  }
  const LabeledFile file = read_labeled(in);
  for (const LineError& e : file.errors) err << "error: line " << e.line << ": " << e.message << '\n';
  if (file.molecules.empty()) {
    err << "error: input '" << c.input << "' has no labeled molecules\n";
    return kConfigError;
  }
  const Dataset data =
      build_dataset(file.molecules, find_property(c.property), c.max_edit_distance, c.limit, c.jobs, err);
  std::string lines;
  for (const EditResponseSample& s : data.samples) lines += to_json(s).dump() + '\n';
  try {
    const std::filesystem::path dir(c.output);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + c.output + "': " + ec.message());
    write_file(dir / "dataset.jsonl", lines);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  out << "pairs " << data.pairs.size() << ", samples " << data.samples.size() << ", skipped " << data.skipped
      << '\n';
  return file.errors.empty() ? kOk : kPartial;
}

// Edit sites index the atoms of the molecule the edit applies to: the input
// FROM in text order for the first edit, then the result of each apply.
inline int cmd_decompose(const std::string& from_text, const std::string& to_text, int max_len, std::ostream& out,
                         std::ostream& err) {
  Molecule from, to;
  try {
    from = parse_smiles(from_text);
    to = parse_smiles(to_text);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  if (max_len < 0) {
    err << "error: max_len must be non-negative\n";
    return kConfigError;
  }
  const auto edits = decompose(from, to, max_len);
  if (!edits) {
    out << "NOT FOUND within " << max_len << '\n';
    return kOk;
  }
  nlohmann::json j = nlohmann::json::array();
  for (const EditAction& e : *edits) j.push_back(to_json(e));
  out << j.dump() << '\n';
  return kOk;
}

struct ReportRow {
  std::string name;
  RunSummary summary;
  bool has_time = false;
};

inline ReportRow read_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read summary '" + path + "'");
  ReportRow row;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    row.summary.avg_imp = j.at("avg_imp").get<double>();
    row.summary.suc_rate = j.at("suc_rate").get<double>();
    row.summary.opt_mean = j.at("opt_mean").get<double>();
    row.summary.n = j.at("n").get<std::size_t>();
    const auto timing_path = std::filesystem::path(path).parent_path() / "timing.json";
    if (std::ifstream t(timing_path); t) {
      row.summary.avg_time_minutes = nlohmann::json::parse(t).at("avg_time_minutes").get<double>();
      row.has_time = true;
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed summary '" + path + "': " + e.what());
  }
  return row;
}

inline std::string row_name(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path().filename().string();
  return parent.empty() ? std::filesystem::path(path).stem().string() : parent;
}

inline int cmd_report(const std::vector<std::string>& paths, std::ostream& out, std::ostream& err) {
  std::vector<ReportRow> rows;
  try {
    for (const std::string& p : paths) rows.push_back(read_summary(p));
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) seen[rows[i].name = row_name(paths[i])]++;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (seen[rows[i].name] > 1) rows[i].name = paths[i];

  std::map<std::string, RunSummary> configs;
  for (const ReportRow& r : rows) configs[r.name] = r.summary;
  std::map<std::string, int> ranks;
  if (configs.size() >= 2) {
    ranks = rank_sum(configs);
  } else {
    for (const auto& [name, s] : configs) ranks[name] = 1;
  }

  std::size_t width = 6;
  for (const ReportRow& r : rows) width = std::max(width, r.name.size());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %10s %10s %9s %12s %8s\n", static_cast<int>(width), "Config", "Opt. Mean",
                "Avg Imp", "Suc Rate", "Avg T (min)", "Overall");
  out << buf;
  for (const ReportRow& r : rows) {
    const std::string time = r.has_time ? std::to_string(r.summary.avg_time_minutes) : "n/a";
    std::snprintf(buf, sizeof buf, "%-*s %10.3f %10.3f %8.2f%% %12s %8d\n", static_cast<int>(width), r.name.c_str(),
                  r.summary.opt_mean, r.summary.avg_imp, 100.0 * r.summary.suc_rate, time.c_str(), ranks.at(r.name));
    out << buf;
  }
  out << "Opt. Mean is the mean property of the selected molecules.\n";
  return kOk;
}

inline void add_search_settings(CLI::App& app, nlohmann::json& flags) {
  add_setting<int>(app, flags, "num_simulations", "simulations per start (default 800)");
  add_setting<double>(app, flags, "exploration_weight", "PUCT exploration weight c (default 2.0)");
  add_setting<int>(app, flags, "max_depth", "maximum trajectory length (default 10)");
  add_setting<int>(app, flags, "pruning_patience", "stagnant steps before a branch is cut (default 3)");
  add_setting<int>(app, flags, "max_branching", "children kept per expansion, K (default 10)");
  add_setting<std::string>(app, flags, "strategy", "mcts or bfs");
  add_setting<std::uint64_t>(app, flags, "seed", "base seed; start i uses seed + i");
  add_setting<std::string>(app, flags, "scorer", "exact, group or noisy");
  add_setting<std::string>(app, flags, "table", "group-contribution table JSON");
  add_setting<double>(app, flags, "noise_sigma", "noise std for the noisy scorer (default 0.3)");
  add_switch(app, flags, "no_prior", "uniform priors");
  add_switch(app, flags, "no_leaf_value", "leaf value from the last edge only");
  add_switch(app, flags, "random_topk", "keep K random candidates instead of the top K");
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"editopt: molecule optimization by single-step graph edits"};
  app.require_subcommand(1);
  nlohmann::json flags = nlohmann::json::object();
  std::string config_path;

  auto* optimize_cmd = app.add_subcommand("optimize", "optimize every start molecule in a file");
  auto* mine_cmd = app.add_subcommand("mine", "mine an edit-response dataset from a labeled file");
  for (CLI::App* cmd : {optimize_cmd, mine_cmd}) {
    cmd->add_option("--config", config_path, "flat JSON config file");
    add_setting<std::string>(*cmd, flags, "input", "input file");
    add_setting<std::string>(*cmd, flags, "output", "output directory");
    add_setting<std::string>(*cmd, flags, "property", "property oracle name");
    add_setting<int>(*cmd, flags, "jobs", "tasks run concurrently (default 1)");
  }
  add_setting<std::string>(*optimize_cmd, flags, "direction", "increase or decrease");
  add_search_settings(*optimize_cmd, flags);
  add_setting<int>(*mine_cmd, flags, "max_edit_distance", "longest decomposition kept (default 2)");
  add_setting<std::size_t>(*mine_cmd, flags, "limit", "maximum number of pairs (default 100000)");

  std::string from, to;
  int max_len = 0;
  auto* decompose_cmd = app.add_subcommand("decompose", "shortest feasible edit sequence between two molecules");
  decompose_cmd->add_option("from", from, "source SMILES")->required();
  decompose_cmd->add_option("to", to, "target SMILES")->required();
  decompose_cmd->add_option("max_len", max_len, "longest sequence searched")->required();

  std::vector<std::string> paths;
  auto* report_cmd = app.add_subcommand("report", "compare summary.json files");
  report_cmd->add_option("summaries", paths, "summary.json files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*decompose_cmd) return cmd_decompose(from, to, max_len, out, err);
    if (*report_cmd) return cmd_report(paths, out, err);
    const RunConfig c = resolve(config_path, flags);
    if (c.input.empty()) throw ConfigError("no input file (--input)");
    if (*optimize_cmd) return cmd_optimize(c, out, err);
    return cmd_mine(c, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
}

}  // namespace editopt::cli

#pragma once

// Experiment configuration: a sectioned key-value file with [problem],
// [agent.<name>], [run] and optional [bounds] sections. See configs/ and the
// README for the full key list.

#include <cstdint>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tslab/bounds.hpp"
#include "tslab/environments.hpp"
#include "tslab/linucb.hpp"

namespace tslab::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AgentKind { ts, linucb, uniform };

inline std::string agent_kind_name(AgentKind k) {
  switch (k) {
    case AgentKind::ts: return "ts";
    case AgentKind::linucb: return "linucb";
    case AgentKind::uniform: return "uniform";
  }
  return "?";
}

struct AgentConfig {
  std::string name;
  AgentKind kind = AgentKind::ts;
  LinUcbOptions linucb;
};

struct ExperimentConfig {
  FamilyConfig problem;
  std::uint64_t problem_seed = 0;
  std::vector<AgentConfig> agents;
  std::size_t horizon = 100;
  std::size_t num_runs = 10;
  std::uint64_t base_seed = 0;
  std::string output_dir = "out";
  bool diagnostics = true;
  bounds::BoundInputs bound_overrides;
};

namespace detail {

using boost::property_tree::ptree;

inline std::string field(const std::string& section, const std::string& key) { return section + "." + key; }

inline std::vector<double> parse_doubles(const std::string& text, const std::string& where) {
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',') c = ' ';
  std::istringstream in(cleaned);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(where + ": '" + tok + "' is not a number");
    }
  }
  return out;
}

inline std::vector<std::vector<double>> parse_points(const std::string& text, const std::string& where) {
  std::vector<std::vector<double>> pts;
  std::istringstream in(text);
  std::string chunk;
  while (std::getline(in, chunk, ';')) {
    auto p = parse_doubles(chunk, where);
    if (!p.empty()) pts.push_back(std::move(p));
  }
  return pts;
}

class Section {
 public:
  Section(std::string name, const ptree& tree) : name_(std::move(name)), tree_(tree) {}

  template <class T>
  std::optional<T> get(const std::string& key) {
    used_.insert(key);
    const auto child = tree_.get_child_optional(ptree::path_type(key, '\0'));
    if (!child) return std::nullopt;
    const std::string raw = child->get_value<std::string>();
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "on" || raw == "yes") return true;
      if (raw == "false" || raw == "0" || raw == "off" || raw == "no") return false;
      throw ConfigError(field(name_, key) + ": expected a boolean, got '" + raw + "'");
    } else if constexpr (std::is_integral_v<T>) {
      try {
        std::size_t used = 0;
        if (!raw.empty() && raw[0] == '-') throw std::invalid_argument(raw);
        const unsigned long long v = std::stoull(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return static_cast<T>(v);
      } catch (const std::exception&) {
        throw ConfigError(field(name_, key) + ": expected a non-negative integer, got '" + raw + "'");
      }
    } else {
      const auto v = parse_doubles(raw, field(name_, key));
      if (v.size() != 1) throw ConfigError(field(name_, key) + ": expected a single number");
      return v.front();
    }
  }

  std::optional<std::string> raw(const std::string& key) { return get<std::string>(key); }

  void reject_unknown() const {
    for (const auto& [key, _] : tree_)
      if (!used_.count(key)) throw ConfigError(field(name_, key) + ": unknown key");
  }

 private:
  std::string name_;
  const ptree& tree_;
  std::set<std::string> used_;
};

template <class T>
void assign(std::optional<T> v, T& out) {
  if (v) out = *v;
}

inline Family parse_family(const std::string& s) {
  if (s == "bernoulli-table") return Family::bernoulli_table;
  if (s == "logistic-linear") return Family::logistic_linear;
  if (s == "truncated-laplace") return Family::truncated_laplace;
  if (s == "linear-gaussian") return Family::linear_gaussian;
  throw ConfigError("problem.family: unknown family '" + s +
                    "' (expected bernoulli-table, logistic-linear, truncated-laplace or linear-gaussian)");
}

inline Link parse_link(const std::string& s) {
  if (s == "logistic") return Link::logistic;
  if (s == "generalized-logistic") return Link::generalized_logistic;
  if (s == "algebraic-logistic") return Link::algebraic_logistic;
  throw ConfigError("problem.link: unknown link '" + s + "'");
}

inline void parse_problem(Section sec, ExperimentConfig& cfg) {
  FamilyConfig& p = cfg.problem;
  const auto family = sec.get<std::string>("family");
  if (!family) throw ConfigError("problem.family: required");
  p.family = parse_family(*family);
  assign(sec.get<std::uint64_t>("seed"), cfg.problem_seed);
  assign(sec.get<std::size_t>("num_params"), p.num_params);
  assign(sec.get<std::size_t>("num_contexts"), p.num_contexts);
  assign(sec.get<std::size_t>("num_actions"), p.num_actions);
  assign(sec.get<std::size_t>("dim"), p.dim);
  assign(sec.get<double>("reward_range"), p.reward_range);
  assign(sec.get<double>("laplace_scale"), p.laplace_scale);
  assign(sec.get<double>("noise_variance"), p.noise_variance);
  if (auto s = sec.get<std::string>("link")) p.link = parse_link(*s);
  assign(sec.get<double>("link_alpha"), p.link_alpha);
  if (auto s = sec.raw("params")) p.params = parse_points(*s, "problem.params");
  assign(sec.get<double>("grid_lo"), p.grid_lo);
  assign(sec.get<double>("grid_hi"), p.grid_hi);
  assign(sec.get<std::size_t>("grid_resolution"), p.grid_resolution);
  if (auto v = sec.get<double>("grid_diameter")) p.grid_diameter = *v;
  assign(sec.get<double>("feature_lo"), p.feature_lo);
  assign(sec.get<double>("feature_hi"), p.feature_hi);
  if (auto s = sec.raw("features")) p.features = parse_doubles(*s, "problem.features");
  assign(sec.get<bool>("linear_means"), p.linear_means);
  if (auto s = sec.raw("table")) p.table = parse_doubles(*s, "problem.table");
  if (auto s = sec.raw("prior")) p.prior = parse_doubles(*s, "problem.prior");
  if (auto s = sec.raw("context_weights")) p.context_weights = parse_doubles(*s, "problem.context_weights");
  if (auto v = sec.get<double>("subgaussian_proxy")) p.subgaussian_proxy = *v;
  sec.reject_unknown();

  if (p.num_contexts == 0) throw ConfigError("problem.num_contexts: must be >= 1");
  if (p.num_actions == 0) throw ConfigError("problem.num_actions: must be >= 1");
  if (p.num_params == 0) throw ConfigError("problem.num_params: must be >= 1");
  if (p.dim == 0) throw ConfigError("problem.dim: must be >= 1");
  if (p.linear_means && p.family != Family::bernoulli_table)
    throw ConfigError("problem.linear_means: only valid for bernoulli-table");
}

inline AgentConfig parse_agent(const std::string& name, Section sec) {
  AgentConfig a;
  a.name = name;
  const std::string type = sec.get<std::string>("type").value_or(name);
  if (type == "ts")
    a.kind = AgentKind::ts;
  else if (type == "linucb")
    a.kind = AgentKind::linucb;
  else if (type == "uniform")
    a.kind = AgentKind::uniform;
  else
    throw ConfigError("agent." + name + ".type: unknown agent '" + type + "' (expected ts, linucb or uniform)");
  assign(sec.get<double>("alpha"), a.linucb.alpha);
  assign(sec.get<double>("lambda"), a.linucb.lambda);
  sec.reject_unknown();
  if (a.kind == AgentKind::linucb) {
    if (!(a.linucb.alpha >= 0.0)) throw ConfigError("agent." + name + ".alpha: must be >= 0");
    if (!(a.linucb.lambda > 0.0)) throw ConfigError("agent." + name + ".lambda: must be > 0");
  }
  return a;
}

inline void parse_run(Section sec, ExperimentConfig& cfg) {
  assign(sec.get<std::size_t>("horizon"), cfg.horizon);
  assign(sec.get<std::size_t>("num_runs"), cfg.num_runs);
  assign(sec.get<std::uint64_t>("base_seed"), cfg.base_seed);
  assign(sec.get<std::string>("output_dir"), cfg.output_dir);
  assign(sec.get<bool>("diagnostics"), cfg.diagnostics);
  sec.reject_unknown();
}

inline void parse_bounds(Section sec, ExperimentConfig& cfg) {
  auto& b = cfg.bound_overrides;
  if (auto v = sec.get<double>("gamma")) b.gamma = *v;
  if (auto v = sec.get<double>("information")) b.information = *v;
  if (auto v = sec.get<double>("lipschitz")) b.lipschitz = *v;
  if (auto v = sec.get<double>("diameter")) b.diameter = *v;
  sec.reject_unknown();
}

}  // namespace detail

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.horizon == 0) throw ConfigError("run.horizon: must be >= 1");
  if (cfg.num_runs == 0) throw ConfigError("run.num_runs: must be >= 1");
  if (cfg.agents.empty()) throw ConfigError("agent: at least one [agent.<name>] section is required");
  std::set<std::string> names;
  for (const auto& a : cfg.agents)
    if (!names.insert(a.name).second) throw ConfigError("agent." + a.name + ": duplicate agent name");
}

namespace detail {

// Section names in file order. The ini reader drops sections without keys,
// but an empty [agent.<name>] is meaningful.
inline std::vector<std::string> section_names(const std::string& text) {
  std::vector<std::string> names;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    const auto e = line.find_last_not_of(" \t\r");
    if (b == std::string::npos || line[b] != '[' || line[e] != ']') continue;
    std::string name = line.substr(b + 1, e - b - 1);
    const auto nb = name.find_first_not_of(" \t");
    const auto ne = name.find_last_not_of(" \t");
    names.push_back(nb == std::string::npos ? std::string() : name.substr(nb, ne - nb + 1));
  }
  return names;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  boost::property_tree::ptree tree;
  try {
    std::istringstream body(text);
    boost::property_tree::ini_parser::read_ini(body, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [name, node] : tree)
    if (node.empty() && !node.data().empty()) throw ConfigError(name + ": key outside of any section");
  boost::property_tree::ptree ordered;
  for (const auto& name : detail::section_names(text)) {
    const auto found = tree.find(name);
    ordered.push_back({name, found == tree.not_found() ? boost::property_tree::ptree() : found->second});
  }
  ExperimentConfig cfg;
  bool have_problem = false;
  for (const auto& [name, section] : ordered) {
    if (name == "problem") {
      detail::parse_problem(detail::Section("problem", section), cfg);
      have_problem = true;
    } else if (name == "run") {
      detail::parse_run(detail::Section("run", section), cfg);
    } else if (name == "bounds") {
      detail::parse_bounds(detail::Section("bounds", section), cfg);
    } else if (name.rfind("agent.", 0) == 0 && name.size() > 6) {
      cfg.agents.push_back(detail::parse_agent(name.substr(6), detail::Section(name, section)));
    } else {
      throw ConfigError(name + ": unknown section");
    }
  }
  if (!have_problem) throw ConfigError("problem: section is required");
  validate(cfg);
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

}  // namespace tslab::harness

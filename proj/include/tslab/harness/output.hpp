#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <json.hpp>

#include "tslab/harness/config.hpp"
#include "tslab/harness/experiment.hpp"

namespace tslab::harness {

using Json = nlohmann::ordered_json;

inline constexpr const char* kRoundsHeader =
    "round,agent,mean_cum_regret,se_cum_regret,mean_inst_regret,mean_mi_t,mean_gamma_t,max_gamma_t,"
    "mean_kl_to_prior";

namespace detail {

// shortest round-trip representation; empty field when unavailable
inline std::string num(double v) { return fmt::format("{}", v); }
inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json mean_se_json(const std::optional<MeanSe>& m) {
  if (!m) return nullptr;
  return Json{{"mean", m->mean}, {"se", opt(m->se)}};
}

inline Json vector_json(const std::vector<double>& v) { return Json(v); }

}  // namespace detail

inline void write_rounds_csv(const AggregateResult& res, std::ostream& out) {
  out << kRoundsHeader << '\n';
  for (const auto& agg : res.agents) {
    for (std::size_t t = 0; t < agg.horizon; ++t) {
      out << (t + 1) << ',' << agg.agent << ',' << detail::num(agg.mean_cum_regret[t]) << ','
          << detail::num(agg.se_cum_regret[t]) << ',' << detail::num(agg.mean_inst_regret[t]) << ',';
      if (agg.has_diagnostics)
        out << detail::num(agg.mean_mi[t]) << ',' << detail::num(agg.mean_gamma[t]) << ','
            << detail::num(agg.max_gamma[t]) << ',' << detail::num(agg.mean_kl[t]);
      else
        out << ",,,";
      out << '\n';
    }
  }
}

inline Json config_json(const ExperimentConfig& cfg) {
  const FamilyConfig& p = cfg.problem;
  Json problem{{"family", family_name(p.family)},
               {"seed", cfg.problem_seed},
               {"num_params", p.num_params},
               {"num_contexts", p.num_contexts},
               {"num_actions", p.num_actions},
               {"dim", p.dim},
               {"reward_range", p.reward_range},
               {"laplace_scale", p.laplace_scale},
               {"noise_variance", p.noise_variance},
               {"link", link_name(p.link)},
               {"link_alpha", p.link_alpha},
               {"params", p.params},
               {"grid_lo", p.grid_lo},
               {"grid_hi", p.grid_hi},
               {"grid_resolution", p.grid_resolution},
               {"grid_diameter", detail::opt(p.grid_diameter)},
               {"feature_lo", p.feature_lo},
               {"feature_hi", p.feature_hi},
               {"features", p.features},
               {"linear_means", p.linear_means},
               {"table", p.table},
               {"prior", p.prior},
               {"context_weights", p.context_weights},
               {"subgaussian_proxy", detail::opt(p.subgaussian_proxy)}};
  Json agents = Json::array();
  for (const auto& a : cfg.agents) {
    Json j{{"name", a.name}, {"type", agent_kind_name(a.kind)}};
    if (a.kind == AgentKind::linucb) {
      j["alpha"] = a.linucb.alpha;
      j["lambda"] = a.linucb.lambda;
    }
    agents.push_back(std::move(j));
  }
  const auto& b = cfg.bound_overrides;
  return Json{{"problem", std::move(problem)},
              {"agents", std::move(agents)},
              {"run",
               {{"horizon", cfg.horizon},
                {"num_runs", cfg.num_runs},
                {"base_seed", cfg.base_seed},
                {"diagnostics", cfg.diagnostics}}},
              {"bounds",
               {{"gamma", detail::opt(b.gamma)},
                {"information", detail::opt(b.information)},
                {"lipschitz", detail::opt(b.lipschitz)},
                {"diameter", detail::opt(b.diameter)}}}};
}

inline Json bounds_json(const bounds::BoundReport& rep) {
  Json values = Json::object();
  for (const auto& [k, v] : rep.values) values[k] = v;
  return Json{{"values", std::move(values)}, {"eps_star", detail::opt(rep.eps_star)}, {"warnings", rep.warnings}};
}

/// Summary document. Wall-clock time is deliberately absent so that repeated
/// runs produce identical bytes.
inline Json summary_json(const ExperimentConfig& cfg, const AggregateResult& res) {
  Json agents = Json::array();
  for (const auto& agg : res.agents) {
    agents.push_back(Json{{"agent", agg.agent},
                          {"runs", agg.runs},
                          {"horizon", agg.horizon},
                          {"final_cum_regret", detail::mean_se_json(agg.final_regret)},
                          {"cum_expected_regret", detail::mean_se_json(agg.cum_expected_regret)},
                          {"sum_mi", detail::mean_se_json(agg.sum_mi)},
                          {"final_kl_to_prior", detail::mean_se_json(agg.final_kl)},
                          {"chain_rule_residual", detail::mean_se_json(agg.chain_rule)},
                          {"gamma_bar", detail::opt(agg.gamma_bar)},
                          {"max_gamma", detail::opt(agg.gamma_max)},
                          {"one_step_violations", agg.one_step_violations}});
  }
  Json checks = Json::object();
  for (const auto& [k, v] : res.checks) checks[k] = v ? Json(*v) : Json(nullptr);
  return Json{{"config", config_json(cfg)},
              {"runs", res.runs},
              {"agents", std::move(agents)},
              {"bounds", bounds_json(res.bounds)},
              {"checks", std::move(checks)},
              {"all_checks_pass", res.all_checks_pass()}};
}

inline void emit_outputs(const ExperimentConfig& cfg, const AggregateResult& res, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("output: cannot create '" + dir.string() + "': " + ec.message());
  {
    std::ofstream csv(dir / "rounds.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("output: cannot write " + (dir / "rounds.csv").string());
    write_rounds_csv(res, csv);
    if (!csv) throw std::runtime_error("output: write failed for rounds.csv");
  }
  {
    std::ofstream js(dir / "summary.json", std::ios::binary);
    if (!js) throw std::runtime_error("output: cannot write " + (dir / "summary.json").string());
    js << summary_json(cfg, res).dump(2) << '\n';
    if (!js) throw std::runtime_error("output: write failed for summary.json");
  }
}

}  // namespace tslab::harness

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tslab/agents.hpp"
#include "tslab/bounds.hpp"
#include "tslab/environments.hpp"
#include "tslab/harness/config.hpp"
#include "tslab/posterior.hpp"
#include "tslab/stats.hpp"

namespace tslab::harness {

/// Worker count: TSLAB_WORKERS when set, otherwise the hardware concurrency.
inline std::size_t default_workers() {
  if (const char* env = std::getenv("TSLAB_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs task(i) for i in [0, n) on up to `workers` threads. Tasks must write
/// only to their own slot; the first exception is rethrown.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct BatchOptions {
  std::size_t horizon = 1;
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  bool diagnostics = true;
  std::size_t workers = 1;
};

inline std::vector<RunTrajectory> run_batch(const ProblemSpec& spec, const AgentConfig& agent,
                                            const BatchOptions& opts) {
  std::vector<RunTrajectory> out(opts.runs);
  parallel_for(opts.runs, opts.workers, [&](std::size_t i) {
    RunOptions ro{.horizon = opts.horizon, .seed = opts.seed, .run_index = i, .diagnostics = opts.diagnostics};
    switch (agent.kind) {
      case AgentKind::ts: out[i] = run_ts(spec, ro); break;
      case AgentKind::uniform: out[i] = run_uniform(spec, ro); break;
      case AgentKind::linucb: out[i] = run_linucb(spec, ro, agent.linucb).trajectory; break;
    }
    out[i].agent = agent.name;
  });
  return out;
}

struct AgentAggregate {
  std::string agent;
  std::size_t runs = 0;
  std::size_t horizon = 0;
  bool has_diagnostics = false;

  // per round, over runs
  std::vector<double> mean_cum_regret;
  std::vector<std::optional<double>> se_cum_regret;
  std::vector<double> mean_inst_regret;
  std::vector<double> mean_mi;
  std::vector<double> mean_gamma;
  std::vector<double> max_gamma;
  std::vector<double> mean_kl;

  MeanSe final_regret;                        // realized pseudo-regret at T
  std::optional<MeanSe> cum_expected_regret;  // Sum_t E_t[R*_t - R_t]
  std::optional<MeanSe> sum_mi;               // Sum_t I_t
  std::optional<MeanSe> final_kl;             // KL(posterior_T || prior)
  std::optional<MeanSe> chain_rule;           // paired Sum_t I_t - KL_final
  std::optional<double> gamma_bar;            // (1/T) Sum_t mean Gamma_t
  std::optional<double> gamma_max;
  std::size_t one_step_violations = 0;  // rounds with regret > sqrt(2 sigma^2 |A| I_t)
};

/// Per-round means over runs, summed in run-index order with compensation.
inline AgentAggregate aggregate(std::span<const RunTrajectory> runs, double sigma2 = 0.0, std::size_t actions = 0) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no trajectories");
  AgentAggregate agg;
  agg.agent = runs.front().agent;
  agg.runs = runs.size();
  agg.horizon = runs.front().inst_regret.size();
  for (const auto& r : runs)
    if (r.inst_regret.size() != agg.horizon) throw std::invalid_argument("aggregate: trajectories differ in length");
  agg.has_diagnostics = std::all_of(runs.begin(), runs.end(),
                                    [&](const RunTrajectory& r) { return r.per_round.size() == agg.horizon; });
  const double n = static_cast<double>(runs.size());
  const std::size_t T = agg.horizon;

  agg.mean_cum_regret.resize(T);
  agg.se_cum_regret.resize(T);
  agg.mean_inst_regret.resize(T);
  std::vector<double> cum(runs.size(), 0.0);
  std::vector<double> scratch(runs.size());
  for (std::size_t t = 0; t < T; ++t) {
    CompensatedSum inst;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      cum[i] += runs[i].inst_regret[t];
      inst.add(runs[i].inst_regret[t]);
    }
    const MeanSe c = mean_se(cum);
    agg.mean_cum_regret[t] = c.mean;
    agg.se_cum_regret[t] = c.se;
    agg.mean_inst_regret[t] = inst.value() / n;
  }
  agg.final_regret = mean_se(cum);

  if (agg.has_diagnostics) {
    agg.mean_mi.resize(T);
    agg.mean_gamma.resize(T);
    agg.max_gamma.resize(T);
    agg.mean_kl.resize(T);
    std::vector<double> sum_mi(runs.size(), 0.0), sum_regret(runs.size(), 0.0);
    CompensatedSum gamma_total;
    double gmax = 0.0;
    const double cap = 2.0 * sigma2 * static_cast<double>(actions);
    for (std::size_t t = 0; t < T; ++t) {
      CompensatedSum mi, gamma, kl;
      double mx = 0.0;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        const RoundDiagnostics& d = runs[i].per_round[t];
        mi.add(d.disintegrated_mi);
        gamma.add(d.lifted_ratio);
        kl.add(d.kl_to_prior);
        mx = std::max(mx, d.lifted_ratio);
        sum_mi[i] += d.disintegrated_mi;
        sum_regret[i] += d.expected_regret;
        if (actions > 0 && d.expected_regret > std::sqrt(cap * d.disintegrated_mi) + 1e-12)
          ++agg.one_step_violations;
      }
      agg.mean_mi[t] = mi.value() / n;
      agg.mean_gamma[t] = gamma.value() / n;
      agg.max_gamma[t] = mx;
      agg.mean_kl[t] = kl.value() / n;
      gamma_total.add(agg.mean_gamma[t]);
      gmax = std::max(gmax, mx);
    }
    agg.gamma_bar = gamma_total.value() / static_cast<double>(T);
    agg.gamma_max = gmax;
    agg.sum_mi = mean_se(sum_mi);
    agg.cum_expected_regret = mean_se(sum_regret);
  }

  const bool has_kl = std::all_of(runs.begin(), runs.end(),
                                  [](const RunTrajectory& r) { return r.final_kl_to_prior.has_value(); });
  if (has_kl) {
    for (std::size_t i = 0; i < runs.size(); ++i) scratch[i] = *runs[i].final_kl_to_prior;
    agg.final_kl = mean_se(scratch);
    if (agg.has_diagnostics) {
      for (std::size_t i = 0; i < runs.size(); ++i) {
        CompensatedSum s;
        for (const auto& d : runs[i].per_round) s.add(d.disintegrated_mi);
        scratch[i] = s.value() - *runs[i].final_kl_to_prior;
      }
      agg.chain_rule = mean_se(scratch);
    }
  }
  return agg;
}

/// Bound values for a problem and horizon. `measured` holds (Gamma_bar, I_hat)
/// from a TS batch when available.
inline bounds::BoundReport evaluate_bounds(const ProblemSpec& spec, std::size_t horizon,
                                           const bounds::BoundInputs& overrides,
                                           std::optional<std::pair<double, double>> measured = std::nullopt) {
  using namespace tslab::bounds;
  BoundReport rep;
  const double T = static_cast<double>(horizon);
  const std::size_t A = spec.num_actions();
  const std::size_t d = spec.dim();
  const double sigma2 = spec.predictive_subgaussian_proxy();
  const double H = entropy(spec.prior());

  rep.values["subgaussian_proxy"] = sigma2;
  rep.values["prior_entropy"] = H;
  rep.values["lemma1_cap"] = lemma1_cap(sigma2, A);
  const bool use_lemma2 = spec.linear_means() && d < A;
  if (spec.linear_means()) rep.values["lemma2_cap"] = lemma2_cap(sigma2, d);
  const double gamma = overrides.gamma.value_or(use_lemma2 ? lemma2_cap(sigma2, d) : lemma1_cap(sigma2, A));
  const double info = overrides.information.value_or(H);
  rep.values["gamma"] = gamma;
  rep.values["information"] = info;
  rep.values["thm1_bound"] = thm1_bound(gamma, T, info);

  if (spec.bounded()) rep.values["cor1_bound"] = cor1_bound(spec.reward_range(), A, T, H);
  if (spec.bounded() && spec.linear_means())
    rep.values["cor3_bound"] = cor3_bound(spec.reward_range(), d, T, spec.num_params());

  const auto lip = overrides.lipschitz ? overrides.lipschitz : loglik_lipschitz(spec);
  const double S = overrides.diameter.value_or(parameter_diameter(spec));
  if (lip && d > 0) {
    if (S > 0.0 && *lip > 0.0) {
      const Thm2Result r2 = thm2_bound(gamma, T, *lip, S, d);
      rep.values["loglik_lipschitz"] = *lip;
      rep.values["diameter"] = S;
      rep.values["thm2_inner"] = r2.inner;
      rep.values["thm2_bound"] = r2.value;
      rep.eps_star = r2.eps_star;
      if (r2.clamped) rep.warnings.push_back("thm2: eps* clamped to 3S");
    } else {
      rep.warnings.push_back("thm2: parameter diameter or Lipschitz constant is zero; bound skipped");
    }
  }
  if (const auto* k = std::get_if<TruncatedLaplace>(&spec.kernel())) {
    const double B = location_lipschitz(spec);
    if (S > 0.0 && B > 0.0) {
      const Cor2Result r = cor2_bound(spec.reward_range(), A, d, S, B, k->scale, T);
      rep.values["cor2_bound"] = r.value;
      if (r.log_warning) rep.warnings.push_back("cor2: log argument <= 1");
    } else {
      rep.warnings.push_back("cor2: parameter diameter or feature bound is zero; bound skipped");
    }
  }
  if (measured) {
    rep.values["gamma_bar"] = measured->first;
    rep.values["measured_information"] = measured->second;
    rep.values["thm1_measured"] = thm1_bound(measured->first, T, measured->second);
  }
  return rep;
}

struct AggregateResult {
  std::vector<AgentAggregate> agents;
  bounds::BoundReport bounds;
  /// Invariant checks; nullopt when a check could not run (e.g. one run only).
  std::map<std::string, std::optional<bool>> checks;
  std::size_t runs = 0;
  double wall_clock_seconds = 0.0;

  bool all_checks_pass() const {
    return std::none_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second == false; });
  }
};

inline constexpr double kCapSlack = 1e-8;
inline constexpr double kStandardErrors = 3.0;

namespace detail {

inline std::optional<bool> within(const MeanSe& m, double bound) {
  if (!m.se) return std::nullopt;
  return m.mean + kStandardErrors * *m.se <= bound;
}

}  // namespace detail

inline void add_checks(const AgentAggregate& agg, const bounds::BoundReport& rep,
                       std::map<std::string, std::optional<bool>>& checks) {
  const std::string p = agg.agent + ".";
  if (agg.gamma_max) {
    checks[p + "gamma_within_lemma1_cap"] = *agg.gamma_max <= rep.values.at("lemma1_cap") + kCapSlack;
    if (rep.values.count("lemma2_cap"))
      checks[p + "gamma_within_lemma2_cap"] = *agg.gamma_max <= rep.values.at("lemma2_cap") + kCapSlack;
    checks[p + "one_step_inequality"] = agg.one_step_violations == 0;
  }
  if (agg.chain_rule) {
    checks[p + "chain_rule"] = agg.chain_rule->se
                                   ? std::optional<bool>(std::abs(agg.chain_rule->mean) <=
                                                         kStandardErrors * *agg.chain_rule->se)
                                   : std::nullopt;
  }
  // cumulative expected regret when diagnostics ran, realized pseudo-regret otherwise
  const MeanSe& regret = agg.cum_expected_regret ? *agg.cum_expected_regret : agg.final_regret;
  for (const char* name : {"thm1_measured", "cor1_bound", "cor2_bound", "cor3_bound", "thm2_bound"}) {
    const auto it = rep.values.find(name);
    if (it == rep.values.end()) continue;
    if (std::string(name) == "thm1_measured" && !agg.gamma_bar) continue;
    checks[p + "regret_within_" + name] = detail::within(regret, it->second);
  }
}

struct ExperimentOptions {
  std::size_t workers = 1;
};

inline AggregateResult run_experiment(const ExperimentConfig& cfg, ExperimentOptions opts = {}) {
  validate(cfg);
  const auto started = std::chrono::steady_clock::now();
  const ProblemSpec spec = make_problem(cfg.problem, cfg.problem_seed);
  for (const auto& a : cfg.agents)
    if (a.kind == AgentKind::linucb && !spec.features())
      throw ConfigError("agent." + a.name + ": linucb needs a feature map (feature-based family or linear_means)");

  AggregateResult res;
  res.runs = cfg.num_runs;
  const BatchOptions batch{cfg.horizon, cfg.num_runs, cfg.base_seed, cfg.diagnostics, opts.workers};
  std::optional<std::pair<double, double>> measured;
  for (const auto& agent : cfg.agents) {
    const auto runs = run_batch(spec, agent, batch);
    res.agents.push_back(aggregate(runs, spec.predictive_subgaussian_proxy(), spec.num_actions()));
    const auto& agg = res.agents.back();
    if (agent.kind == AgentKind::ts && !measured && agg.gamma_bar && agg.final_kl)
      measured = std::make_pair(*agg.gamma_bar, agg.final_kl->mean);
  }
  res.bounds = evaluate_bounds(spec, cfg.horizon, cfg.bound_overrides, measured);
  for (std::size_t i = 0; i < cfg.agents.size(); ++i)
    if (cfg.agents[i].kind == AgentKind::ts) add_checks(res.agents[i], res.bounds, res.checks);
  res.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return res;
}

}  // namespace tslab::harness

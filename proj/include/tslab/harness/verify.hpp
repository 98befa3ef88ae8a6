#pragma once

// Property suites behind `tslab verify`: exactness against brute-force
// enumeration, information-ratio caps, and the chain-rule identity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tslab/agents.hpp"
#include "tslab/environments.hpp"
#include "tslab/harness/experiment.hpp"
#include "tslab/info_metrics.hpp"
#include "tslab/oracle.hpp"

namespace tslab::harness {

struct CheckLine {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckLine> lines;
  bool passed() const {
    return std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.passed; });
  }
};

inline PosteriorState posterior_from_weights(std::span<const double> w, std::size_t round = 0) {
  std::vector<double> lw(w.size());
  std::transform(w.begin(), w.end(), lw.begin(), [](double v) {
    return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
  });
  return PosteriorState(std::move(lw), round);
}

// ---------------------------------------------------------------------------
// Exactness against enumeration

inline constexpr double kBinaryOracleTolerance = 1e-9;
inline constexpr double kQuadratureOracleTolerance = 1e-6;

struct OracleErrors {
  double posterior = 0.0;
  double optimality = 0.0;
  double regret = 0.0;
  double mi = 0.0;
  std::size_t states = 0;

  void absorb(const OracleErrors& o) {
    posterior = std::max(posterior, o.posterior);
    optimality = std::max(optimality, o.optimality);
    regret = std::max(regret, o.regret);
    mi = std::max(mi, o.mi);
    states += o.states;
  }
};

/// Compares every pre-action posterior of one TS run, at every context,
/// against the brute-force routes.
inline OracleErrors compare_with_oracle(const ProblemSpec& spec, std::size_t horizon, std::uint64_t seed) {
  RunOptions ro{.horizon = horizon, .seed = seed, .diagnostics = false, .record_posteriors = true};
  const RunTrajectory traj = run_ts(spec, ro);
  OracleErrors err;
  for (std::size_t t = 0; t < traj.posteriors.size(); ++t) {
    const History prefix(traj.history.begin(), traj.history.begin() + static_cast<std::ptrdiff_t>(t));
    const auto& w = traj.posteriors[t];
    const auto ref = spec.binary_rewards() ? oracle::joint_posterior(spec, prefix) : oracle::product_posterior(spec, prefix);
    for (std::size_t k = 0; k < w.size(); ++k) err.posterior = std::max(err.posterior, std::abs(w[k] - ref[k]));
    if (t == horizon) break;  // final posterior has no following round
    const PosteriorState post = posterior_from_weights(w, t);
    for (std::size_t x = 0; x < spec.num_contexts(); ++x) {
      const auto probs = optimality_probs(spec, post, ContextId{x});
      const auto ref_probs = oracle::optimality_probs(spec, w, x);
      for (std::size_t a = 0; a < probs.size(); ++a)
        err.optimality = std::max(err.optimality, std::abs(probs[a] - ref_probs[a]));
      err.regret = std::max(err.regret, std::abs(expected_round_regret(spec, post, ContextId{x}) -
                                                 oracle::expected_regret(spec, w, x)));
      err.mi = std::max(err.mi, std::abs(disintegrated_mi(spec, post, ContextId{x}) -
                                         oracle::mutual_information(spec, w, x)));
      ++err.states;
    }
  }
  return err;
}

inline FamilyConfig random_bernoulli_config(Rng& rng, std::size_t max_params, std::size_t max_contexts,
                                            std::size_t max_actions, std::size_t max_cells) {
  FamilyConfig cfg;
  cfg.family = Family::bernoulli_table;
  do {
    cfg.num_params = 1 + rng() % max_params;
    cfg.num_contexts = 1 + rng() % max_contexts;
    cfg.num_actions = 1 + rng() % max_actions;
  } while (cfg.num_params * cfg.num_contexts * cfg.num_actions > max_cells);
  return cfg;
}

inline SuiteReport verify_oracle(std::uint64_t seed = 1) {
  SuiteReport rep{"oracle", {}};
  Rng rng = make_stream(seed, 0, StreamRole::param);

  OracleErrors binary;
  for (int i = 0; i < 40; ++i) {
    FamilyConfig cfg = random_bernoulli_config(rng, 6, 3, 5, 60);
    // skewed priors exercise non-uniform weights
    if (i % 3 == 0) {
      cfg.prior.resize(cfg.num_params);
      double total = 0.0;
      for (double& p : cfg.prior) total += (p = 0.1 + uniform01(rng));
      for (double& p : cfg.prior) p /= total;
      cfg.prior.back() = 1.0 - std::accumulate(cfg.prior.begin(), cfg.prior.end() - 1, 0.0);
    }
    const ProblemSpec spec = make_unstructured(cfg, seed * 1000 + static_cast<std::uint64_t>(i));
    binary.absorb(compare_with_oracle(spec, 10, seed + static_cast<std::uint64_t>(i)));
  }
  for (int i = 0; i < 6; ++i) {
    FamilyConfig cfg;
    cfg.family = Family::logistic_linear;
    cfg.dim = 2;
    cfg.num_contexts = 2;
    cfg.num_actions = 3;
    cfg.grid_lo = -2.0;
    cfg.grid_hi = 2.0;
    cfg.grid_resolution = 3;
    cfg.link = static_cast<Link>(i % 3);
    cfg.link_alpha = 0.5 + i;
    const ProblemSpec spec = make_logistic_bernoulli(cfg, seed + 77 + static_cast<std::uint64_t>(i));
    binary.absorb(compare_with_oracle(spec, 10, seed + 91 + static_cast<std::uint64_t>(i)));
  }
  auto line = [&](const std::string& name, double e, double tol, std::size_t states) {
    rep.lines.push_back({name, e <= tol, fmt::format("max abs error {:.3e} (tol {:.0e}) over {} states", e, tol, states)});
  };
  line("binary posterior", binary.posterior, kBinaryOracleTolerance, binary.states);
  line("binary optimality_probs", binary.optimality, kBinaryOracleTolerance, binary.states);
  line("binary expected_round_regret", binary.regret, kBinaryOracleTolerance, binary.states);
  line("binary disintegrated_mi", binary.mi, kBinaryOracleTolerance, binary.states);

  OracleErrors continuous;
  for (int i = 0; i < 6; ++i) {
    FamilyConfig cfg;
    cfg.dim = 2;
    cfg.num_contexts = 2;
    cfg.num_actions = 3;
    cfg.grid_resolution = 2;
    ProblemSpec spec = [&] {
      if (i % 2 == 0) {
        cfg.family = Family::truncated_laplace;
        cfg.grid_lo = 0.0;
        cfg.grid_hi = 0.8;
        cfg.laplace_scale = 0.2 + 0.1 * i;
        return make_laplace(cfg, seed + 300 + static_cast<std::uint64_t>(i));
      }
      cfg.family = Family::linear_gaussian;
      cfg.grid_lo = -1.0;
      cfg.grid_hi = 1.0;
      cfg.noise_variance = 0.25 * i;
      return make_linear_gaussian(cfg, seed + 300 + static_cast<std::uint64_t>(i));
    }();
    continuous.absorb(compare_with_oracle(spec, 4, seed + 400 + static_cast<std::uint64_t>(i)));
  }
  line("quadrature posterior", continuous.posterior, kQuadratureOracleTolerance, continuous.states);
  line("quadrature optimality_probs", continuous.optimality, kQuadratureOracleTolerance, continuous.states);
  line("quadrature expected_round_regret", continuous.regret, kQuadratureOracleTolerance, continuous.states);
  line("quadrature disintegrated_mi", continuous.mi, kQuadratureOracleTolerance, continuous.states);
  return rep;
}

// ---------------------------------------------------------------------------
// Information-ratio caps

struct CapSweep {
  double worst_ratio = 0.0;  // max Gamma_t / cap
  double worst_excess = -INFINITY;  // max Gamma_t - cap
  std::size_t states = 0;
};

/// Gamma_t at every context for every pre-action posterior along `runs` TS runs.
inline void sweep_caps(const ProblemSpec& spec, double cap, std::size_t horizon, std::size_t runs,
                       std::uint64_t seed, CapSweep& out) {
  for (std::size_t r = 0; r < runs; ++r) {
    RunOptions ro{.horizon = horizon, .seed = seed, .run_index = r, .diagnostics = false, .record_posteriors = true};
    const RunTrajectory traj = run_ts(spec, ro);
    for (std::size_t t = 0; t < horizon; ++t) {
      const PosteriorState post = posterior_from_weights(traj.posteriors[t], t);
      for (std::size_t x = 0; x < spec.num_contexts(); ++x) {
        const double g = lifted_info_ratio(spec, post, ContextId{x});
        out.worst_excess = std::max(out.worst_excess, g - cap);
        out.worst_ratio = std::max(out.worst_ratio, g / cap);
        ++out.states;
      }
    }
  }
}

inline CheckLine verify_lemma1_caps(std::uint64_t seed = 2) {
  Rng rng = make_stream(seed, 0, StreamRole::param);
  CapSweep sweep;
  for (int i = 0; i < 50; ++i) {
    FamilyConfig cfg = random_bernoulli_config(rng, 6, 3, 5, 90);
    const ProblemSpec spec = make_unstructured(cfg, seed * 7919 + static_cast<std::uint64_t>(i));
    const double cap = bounds::lemma1_cap(spec.subgaussian_proxy(), spec.num_actions());
    sweep_caps(spec, cap, 50, 4, seed + static_cast<std::uint64_t>(i), sweep);
  }
  return {"lemma1 cap (50 bernoulli instances, T=50)", sweep.worst_excess <= kCapSlack,
          fmt::format("max Gamma/cap {:.4f}, max Gamma-cap {:.3e} over {} states", sweep.worst_ratio,
                      sweep.worst_excess, sweep.states)};
}

/// Linear-mean and logistic instances with d = 2 < |A| = 8.
inline std::vector<ProblemSpec> lemma2_instances(std::uint64_t seed) {
  std::vector<ProblemSpec> out;
  for (int i = 0; i < 3; ++i) {
    FamilyConfig g;
    g.family = Family::linear_gaussian;
    g.dim = 2;
    g.num_actions = 8;
    g.num_contexts = 3;
    g.grid_lo = -1.0;
    g.grid_hi = 1.0;
    g.grid_resolution = 3;
    g.noise_variance = 0.1 + 0.2 * i;
    g.feature_lo = -1.0;
    g.feature_hi = 1.0;
    out.push_back(make_linear_gaussian(g, seed + static_cast<std::uint64_t>(i)));

    FamilyConfig l;
    l.family = Family::logistic_linear;
    l.dim = 2;
    l.num_actions = 8;
    l.num_contexts = 3;
    l.grid_lo = -2.0;
    l.grid_hi = 2.0;
    l.grid_resolution = 3;
    l.feature_lo = -1.0;
    l.feature_hi = 1.0;
    out.push_back(make_logistic_bernoulli(l, seed + 10 + static_cast<std::uint64_t>(i)));

    FamilyConfig b;
    b.family = Family::bernoulli_table;
    b.linear_means = true;
    b.dim = 2;
    b.num_actions = 8;
    b.num_contexts = 3;
    b.grid_lo = 0.0;
    b.grid_hi = 0.5;
    b.grid_resolution = 4;
    out.push_back(make_unstructured(b, seed + 20 + static_cast<std::uint64_t>(i)));
  }
  return out;
}

inline CheckLine verify_lemma2_caps(std::uint64_t seed = 3) {
  CapSweep sweep;
  std::size_t k = 0;
  for (const ProblemSpec& spec : lemma2_instances(seed)) {
    const double cap = bounds::lemma2_cap(spec.predictive_subgaussian_proxy(), spec.dim());
    sweep_caps(spec, cap, 50, 3, seed + 100 + k++, sweep);
  }
  return {"lemma2 cap (gaussian/logistic/linear-bernoulli, d=2, |A|=8, T=50)", sweep.worst_excess <= kCapSlack,
          fmt::format("max Gamma/cap {:.4f}, max Gamma-cap {:.3e} over {} states", sweep.worst_ratio,
                      sweep.worst_excess, sweep.states)};
}

inline SuiteReport verify_caps(std::uint64_t seed = 2) {
  return {"caps", {verify_lemma1_caps(seed), verify_lemma2_caps(seed + 1)}};
}

// ---------------------------------------------------------------------------
// Chain rule on the bounded reference batch

/// |O| = 8, |A| = 4, |X| = 4, uniform prior, i.i.d. uniform success table.
inline FamilyConfig reference_bernoulli_config() {
  FamilyConfig cfg;
  cfg.family = Family::bernoulli_table;
  cfg.num_params = 8;
  cfg.num_actions = 4;
  cfg.num_contexts = 4;
  return cfg;
}

/// Bernoulli rewards with p = <theta, m(x, a)>: d = 2, 16-point grid on
/// [0.05, 0.2]^2, features uniform on [0, 2.5]^2.
inline FamilyConfig reference_linear_config() {
  FamilyConfig cfg;
  cfg.family = Family::bernoulli_table;
  cfg.linear_means = true;
  cfg.dim = 2;
  cfg.num_contexts = 4;
  cfg.num_actions = 6;
  cfg.grid_lo = 0.05;
  cfg.grid_hi = 0.2;
  cfg.grid_resolution = 4;
  cfg.feature_lo = 0.0;
  cfg.feature_hi = 2.5;
  return cfg;
}

inline CheckLine chain_rule_line(const AgentAggregate& agg) {
  if (!agg.chain_rule || !agg.chain_rule->se) return {"chain rule", false, "no diagnostics or fewer than 2 runs"};
  const double resid = std::abs(agg.chain_rule->mean);
  const double se = *agg.chain_rule->se;
  return {"chain rule", resid <= kStandardErrors * se,
          fmt::format("|mean(Sum I_t) - mean(KL_T)| = {:.4f} vs 3 SE = {:.4f} (Sum I_t {:.4f}, KL_T {:.4f})", resid,
                      kStandardErrors * se, agg.sum_mi->mean, agg.final_kl->mean)};
}

inline SuiteReport verify_chain_rule(std::uint64_t seed = 4, std::size_t workers = 1) {
  const ProblemSpec spec = make_unstructured(reference_bernoulli_config(), seed);
  const auto runs = run_batch(spec, AgentConfig{"ts", AgentKind::ts, {}},
                              BatchOptions{.horizon = 1000, .runs = 200, .seed = seed, .workers = workers});
  return {"chain-rule", {chain_rule_line(aggregate(runs, spec.subgaussian_proxy(), spec.num_actions()))}};
}

}  // namespace tslab::harness

#pragma once

// Thompson Sampling and the two control baselines, each producing a seeded
// trajectory with exact pseudo-regret accounting.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tslab/info_metrics.hpp"
#include "tslab/linucb.hpp"
#include "tslab/posterior.hpp"
#include "tslab/problem.hpp"
#include "tslab/rng.hpp"

namespace tslab {

struct RunOptions {
  std::size_t horizon = 1;
  std::uint64_t seed = 0;
  std::size_t run_index = 0;
  bool diagnostics = true;
  bool record_posteriors = false;  // keep every pre-action weight vector (tests)
};

struct RunTrajectory {
  std::string agent;
  History history;
  std::vector<RoundDiagnostics> per_round;  // TS with diagnostics only
  std::vector<double> inst_regret;          // exact per-round pseudo-regret
  std::vector<std::vector<double>> posteriors;
  ParamId true_param;
  double realized_regret = 0.0;
  std::optional<double> final_kl_to_prior;  // TS only
  std::uint64_t seed = 0;
  std::size_t run_index = 0;
};

namespace detail {

struct RunStreams {
  Rng param;
  Rng contexts;
  Rng rewards;
  Rng sampling;

  RunStreams(std::uint64_t seed, std::size_t run)
      : param(make_stream(seed, run, StreamRole::param)),
        contexts(make_stream(seed, run, StreamRole::contexts)),
        rewards(make_stream(seed, run, StreamRole::rewards)),
        sampling(make_stream(seed, run, StreamRole::sampling)) {}
};

inline RunTrajectory start_trajectory(const ProblemSpec& spec, const RunOptions& opts, RunStreams& rs,
                                      std::string agent) {
  if (opts.horizon == 0) throw std::invalid_argument("horizon must be >= 1");
  RunTrajectory traj;
  traj.agent = std::move(agent);
  traj.seed = opts.seed;
  traj.run_index = opts.run_index;
  traj.true_param = ParamId{sample_categorical(spec.prior(), rs.param)};
  traj.history.reserve(opts.horizon);
  traj.inst_regret.reserve(opts.horizon);
  return traj;
}

inline ContextId draw_context(const ProblemSpec& spec, Rng& rng) {
  return ContextId{sample_categorical(spec.context_weights(), rng)};
}

inline double play(const ProblemSpec& spec, RunTrajectory& traj, RunStreams& rs, ContextId x, ActionId a) {
  const ParamId truth = traj.true_param;
  const double r = sample_reward(spec, rs.rewards, truth, x, a);
  const double gap = spec.mean(truth, x, spec.best_action(truth, x)) - spec.mean(truth, x, a);
  traj.history.push_back({x, a, r});
  traj.inst_regret.push_back(gap);
  traj.realized_regret += gap;
  return r;
}

}  // namespace detail

/// One TS decision: psi*(x, theta_hat) with theta_hat drawn from the posterior.
inline ActionId ts_step(const ProblemSpec& spec, const PosteriorState& post, ContextId x, Rng& rng) {
  return optimal_action(spec, sample_param(post, rng), x);
}

inline RunTrajectory run_ts(const ProblemSpec& spec, const RunOptions& opts) {
  detail::RunStreams rs(opts.seed, opts.run_index);
  RunTrajectory traj = detail::start_trajectory(spec, opts, rs, "ts");
  if (opts.diagnostics) traj.per_round.reserve(opts.horizon);
  PosteriorState post = init_prior(spec);
  for (std::size_t t = 0; t < opts.horizon; ++t) {
    const ContextId x = detail::draw_context(spec, rs.contexts);
    if (opts.diagnostics) traj.per_round.push_back(diagnose(spec, post, x));
    if (opts.record_posteriors) traj.posteriors.emplace_back(post.weights().begin(), post.weights().end());
    const ActionId a = ts_step(spec, post, x, rs.sampling);
    const double r = detail::play(spec, traj, rs, x, a);
    post = update(post, spec, x, a, r);
  }
  if (opts.record_posteriors) traj.posteriors.emplace_back(post.weights().begin(), post.weights().end());
  traj.final_kl_to_prior = kl_to_prior(post, spec);
  return traj;
}

inline RunTrajectory run_ts(const ProblemSpec& spec, std::size_t horizon, std::uint64_t seed) {
  return run_ts(spec, RunOptions{.horizon = horizon, .seed = seed});
}

inline RunTrajectory run_uniform(const ProblemSpec& spec, const RunOptions& opts) {
  detail::RunStreams rs(opts.seed, opts.run_index);
  RunTrajectory traj = detail::start_trajectory(spec, opts, rs, "uniform");
  const std::vector<double> flat(spec.num_actions(), 1.0 / static_cast<double>(spec.num_actions()));
  for (std::size_t t = 0; t < opts.horizon; ++t) {
    const ContextId x = detail::draw_context(spec, rs.contexts);
    const ActionId a{sample_categorical(flat, rs.sampling)};
    detail::play(spec, traj, rs, x, a);
  }
  return traj;
}

inline RunTrajectory run_uniform(const ProblemSpec& spec, std::size_t horizon, std::uint64_t seed) {
  return run_uniform(spec, RunOptions{.horizon = horizon, .seed = seed});
}

struct LinUcbRun {
  RunTrajectory trajectory;
  LinUcbState state;
};

inline LinUcbRun run_linucb(const ProblemSpec& spec, const RunOptions& opts, LinUcbOptions params = {}) {
  if (!spec.features()) throw std::invalid_argument("linucb: problem has no feature map");
  detail::RunStreams rs(opts.seed, opts.run_index);
  LinUcbRun out{detail::start_trajectory(spec, opts, rs, "linucb"), LinUcbState::fresh(spec.dim(), params)};
  for (std::size_t t = 0; t < opts.horizon; ++t) {
    const ContextId x = detail::draw_context(spec, rs.contexts);
    const ActionId a = linucb_step(out.state, *spec.features(), x);
    const double r = detail::play(spec, out.trajectory, rs, x, a);
    out.state = linucb_update(std::move(out.state), spec.features()->at(x, a), r);
  }
  return out;
}

}  // namespace tslab

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "tslab/agents.hpp"
#include "tslab/environments.hpp"
#include "tslab/oracle.hpp"
#include "tslab/stats.hpp"

using namespace tslab;
using namespace tslab::testing;

namespace {

const ContextId x0{0};

PosteriorState from_weights(const std::vector<double>& w) {
  std::vector<double> lw(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) lw[i] = w[i] > 0.0 ? std::log(w[i]) : -INFINITY;
  return PosteriorState(std::move(lw), 0);
}

ProblemSpec random_table(std::uint64_t seed, std::size_t params, std::size_t contexts, std::size_t actions) {
  FamilyConfig cfg;
  cfg.num_params = params;
  cfg.num_contexts = contexts;
  cfg.num_actions = actions;
  return make_unstructured(cfg, seed);
}

}  // namespace

TEST(TsStep, PointMassIsDeterministic) {
  const auto spec = swapped_spec();
  Rng rng = make_stream(1, 0, StreamRole::sampling);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(ts_step(spec, from_weights({1.0, 0.0}), x0, rng).value, 0u);
    EXPECT_EQ(ts_step(spec, from_weights({0.0, 1.0}), x0, rng).value, 1u);
  }
}

TEST(TsStep, SymmetricInstanceSplitsEvenly) {
  const auto spec = swapped_spec();
  Rng rng = make_stream(2, 0, StreamRole::sampling);
  const auto post = init_prior(spec);
  int first = 0;
  for (int i = 0; i < 100000; ++i) first += ts_step(spec, post, x0, rng).value == 0;
  EXPECT_NEAR(first / 1e5, 0.5, 0.01);
}

TEST(TsStep, ProbabilityMatching) {
  Rng rng = make_stream(3, 0, StreamRole::sampling);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto spec = random_table(300 + s, 6, 2, 4);
    std::vector<double> w(6);
    double tot = 0.0;
    for (double& v : w) tot += v = -std::log1p(-uniform01(rng));
    for (double& v : w) v /= tot;
    const auto post = from_weights(w);
    const ContextId x{s % 2};
    const auto probs = optimality_probs(spec, post, x);
    std::vector<double> freq(4, 0.0);
    for (int i = 0; i < 100000; ++i) freq[ts_step(spec, post, x, rng).value] += 1e-5;
    double tv = 0.0;
    for (std::size_t a = 0; a < 4; ++a) tv += 0.5 * std::abs(freq[a] - probs[a]);
    EXPECT_LE(tv, 0.02);
  }
}

TEST(RunTs, SingleParameterHasNoRegret) {
  const auto spec = random_table(5, 1, 3, 4);
  const auto traj = run_ts(spec, 200, 9);
  EXPECT_EQ(traj.history.size(), 200u);
  for (double g : traj.inst_regret) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(traj.realized_regret, 0.0);
  for (const auto& d : traj.per_round) {
    EXPECT_EQ(d.expected_regret, 0.0);
    EXPECT_EQ(d.disintegrated_mi, 0.0);
    EXPECT_EQ(d.lifted_ratio, 0.0);
  }
}

TEST(RunTs, Deterministic) {
  const auto spec = random_table(6, 5, 2, 3);
  const auto a = run_ts(spec, 300, 42);
  const auto b = run_ts(spec, 300, 42);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t t = 0; t < a.history.size(); ++t) {
    EXPECT_EQ(a.history[t].context, b.history[t].context);
    EXPECT_EQ(a.history[t].action, b.history[t].action);
    EXPECT_EQ(a.history[t].reward, b.history[t].reward);
    EXPECT_EQ(a.per_round[t].disintegrated_mi, b.per_round[t].disintegrated_mi);
  }
  EXPECT_EQ(a.realized_regret, b.realized_regret);
  EXPECT_EQ(a.true_param, b.true_param);
}

TEST(RunTs, PosteriorPathMatchesOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto spec = random_table(400 + s, 2, 1, 2);
    const auto traj = run_ts(spec, RunOptions{.horizon = 3, .seed = s, .record_posteriors = true});
    ASSERT_EQ(traj.posteriors.size(), 4u);
    for (std::size_t t = 0; t <= 3; ++t) {
      const History prefix(traj.history.begin(), traj.history.begin() + static_cast<std::ptrdiff_t>(t));
      const auto ref = oracle::joint_posterior(spec, prefix);
      for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(traj.posteriors[t][k], ref[k], 1e-9);
    }
  }
}

TEST(RunTs, RegretAccountingUsesExactMeans) {
  const auto spec = random_table(8, 4, 3, 3);
  const auto traj = run_ts(spec, 100, 3);
  double total = 0.0;
  for (std::size_t t = 0; t < traj.history.size(); ++t) {
    const auto& o = traj.history[t];
    const double best = spec.mean(traj.true_param, o.context, spec.best_action(traj.true_param, o.context));
    EXPECT_EQ(traj.inst_regret[t], best - spec.mean(traj.true_param, o.context, o.action));
    total += traj.inst_regret[t];
  }
  EXPECT_NEAR(traj.realized_regret, total, 1e-12);
}

TEST(RunTs, RealizedRegretTracksExpectedRegret) {
  const auto spec = random_table(9, 6, 2, 4);
  constexpr std::size_t runs = 400;
  std::vector<double> diff(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    const auto traj = run_ts(spec, RunOptions{.horizon = 100, .seed = 17, .run_index = r});
    double expected = 0.0;
    for (const auto& d : traj.per_round) expected += d.expected_regret;
    diff[r] = traj.realized_regret - expected;
  }
  const auto ms = mean_se(diff);
  EXPECT_LE(std::abs(ms.mean), 3.0 * *ms.se);
}

TEST(RunTs, ZeroHorizonThrows) { EXPECT_THROW(run_ts(swapped_spec(), 0, 1), std::invalid_argument); }

TEST(RunUniform, SingleActionIsOptimal) {
  const auto spec = random_table(10, 4, 2, 1);
  const auto traj = run_uniform(spec, 100, 1);
  EXPECT_EQ(traj.realized_regret, 0.0);
}

TEST(RunUniform, SymmetricInstanceHasConstantExpectedRegret) {
  const auto spec = swapped_spec();
  constexpr std::size_t runs = 2000, horizon = 20;
  std::vector<std::vector<double>> by_round(horizon, std::vector<double>(runs));
  for (std::size_t r = 0; r < runs; ++r) {
    const auto traj = run_uniform(spec, RunOptions{.horizon = horizon, .seed = 5, .run_index = r});
    for (std::size_t t = 0; t < horizon; ++t) by_round[t][r] = traj.inst_regret[t];
  }
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto ms = mean_se(by_round[t]);
    EXPECT_LE(std::abs(ms.mean - 0.3), 3.0 * *ms.se + 1e-12) << "round " << t;
  }
}

TEST(RunUniform, SlopeEqualsMeanGap) {
  const auto spec = random_table(13, 5, 3, 4);
  double gap = 0.0;
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t x = 0; x < 3; ++x) {
      const ParamId p{t};
      const ContextId c{x};
      const double best = spec.mean(p, c, spec.best_action(p, c));
      for (std::size_t a = 0; a < 4; ++a) gap += (best - spec.mean(p, c, ActionId{a})) / (5.0 * 3.0 * 4.0);
    }
  constexpr std::size_t runs = 200, horizon = 500;
  std::vector<double> slope(runs);
  for (std::size_t r = 0; r < runs; ++r)
    slope[r] = run_uniform(spec, RunOptions{.horizon = horizon, .seed = 21, .run_index = r}).realized_regret / horizon;
  const auto ms = mean_se(slope);
  EXPECT_LE(std::abs(ms.mean - gap), 3.0 * *ms.se);
}

TEST(RunUniform, SharesTrueParameterAndContextsWithTs) {
  const auto spec = random_table(14, 6, 3, 3);
  for (std::size_t r = 0; r < 10; ++r) {
    const RunOptions opts{.horizon = 50, .seed = 8, .run_index = r};
    const auto ts = run_ts(spec, opts);
    const auto uni = run_uniform(spec, opts);
    EXPECT_EQ(ts.true_param, uni.true_param);
    for (std::size_t t = 0; t < 50; ++t) EXPECT_EQ(ts.history[t].context, uni.history[t].context);
  }
}

TEST(LinUcb, FreshStatePrefersNonzeroFeature) {
  const FeatureMap fm(1, 3, 2, {0.0, 0.0, 0.0, 0.0, 0.6, 0.8});
  EXPECT_EQ(linucb_step(LinUcbState::fresh(2), fm, x0).value, 2u);
}

TEST(LinUcb, NoExplorationTiesToSmallestIndex) {
  const FeatureMap fm(1, 3, 2, {0.3, 0.1, 0.9, 0.4, 0.2, 0.2});
  EXPECT_EQ(linucb_step(LinUcbState::fresh(2, {.alpha = 0.0}), fm, x0).value, 0u);
}

TEST(LinUcb, UpdateAccumulatesRankOne) {
  auto s = LinUcbState::fresh(2, {.alpha = 1.0, .lambda = 2.0});
  const std::vector<double> m{1.0, 3.0};
  s = linucb_update(std::move(s), m, 0.5);
  EXPECT_DOUBLE_EQ(s.gram(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(s.gram(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(s.gram(1, 1), 11.0);
  EXPECT_DOUBLE_EQ(s.response(0), 0.5);
  EXPECT_DOUBLE_EQ(s.response(1), 1.5);
  EXPECT_THROW(linucb_update(s, std::vector<double>{1.0}, 0.0), std::invalid_argument);
}

TEST(LinUcb, RecoversParameterFromDeterministicRewards) {
  const std::vector<double> theta{0.4, -0.7};
  Rng rng = make_stream(30, 0, StreamRole::contexts);
  std::vector<double> data(5 * 4 * 2);
  for (double& v : data) v = 2.0 * uniform01(rng) - 1.0;
  const FeatureMap fm(5, 4, 2, data);
  auto state = LinUcbState::fresh(2);
  for (int t = 0; t < 500; ++t) {
    const ContextId x{static_cast<std::size_t>(rng() % 5)};
    const ActionId a = linucb_step(state, fm, x);
    state = linucb_update(std::move(state), fm.at(x, a), dot(theta, fm.at(x, a)));
  }
  const auto est = state.estimate();
  EXPECT_LE(std::hypot(est(0) - theta[0], est(1) - theta[1]), 0.05);
}

TEST(LinUcb, RequiresFeatureMap) {
  const auto spec = swapped_spec();
  EXPECT_THROW(linucb_step(LinUcbState::fresh(1), spec, x0), std::invalid_argument);
  EXPECT_THROW(run_linucb(spec, RunOptions{.horizon = 5}), std::invalid_argument);
}

TEST(LinUcb, RejectsBadOptions) {
  EXPECT_THROW(LinUcbState::fresh(0), std::invalid_argument);
  EXPECT_THROW(LinUcbState::fresh(2, {.alpha = -1.0}), std::invalid_argument);
  EXPECT_THROW(LinUcbState::fresh(2, {.lambda = 0.0}), std::invalid_argument);
}

#pragma once

// Exact one-round information quantities conditioned on the history (through
// the posterior) and the current context.

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>
#include <variant>
#include <vector>

#include "tslab/posterior.hpp"
#include "tslab/problem.hpp"
#include "tslab/quadrature.hpp"

namespace tslab {

struct RoundDiagnostics {
  double expected_regret = 0.0;
  double disintegrated_mi = 0.0;  // nats
  double lifted_ratio = 0.0;
  double kl_to_prior = 0.0;  // nats
  std::size_t round_index = 0;
};

/// Gaussian quadrature support extends this many noise deviations past the
/// extreme means.
inline constexpr double kGaussianTailWidth = 8.0;

/// P_t(A* = a) = Sum over theta with psi*(x, theta) = a of w(theta).
inline std::vector<double> optimality_probs(const ProblemSpec& spec, const PosteriorState& post, ContextId x) {
  spec.check(x);
  std::vector<double> probs(spec.num_actions(), 0.0);
  for (std::size_t t = 0; t < post.size(); ++t) {
    const double w = post.weights()[t];
    if (w > 0.0) probs[spec.best_action(ParamId{t}, x).value] += w;
  }
  return probs;
}

/// E_t[R*_t - R_t] = Sum_a P_t(A* = a) (E_t[R(a) | A* = a] - E_t[R(a)]).
/// The inner difference is accumulated as Sum_theta' w(theta') (mu(theta, a) -
/// mu(theta', a)) so that nearly concentrated posteriors keep relative accuracy.
inline double expected_round_regret(const ProblemSpec& spec, const PosteriorState& post, ContextId x) {
  spec.check(x);
  double regret = 0.0;
  for (std::size_t t = 0; t < post.size(); ++t) {
    const double w = post.weights()[t];
    if (w <= 0.0) continue;
    const ActionId a = spec.best_action(ParamId{t}, x);
    const double mu = spec.mean(ParamId{t}, x, a);
    double excess = 0.0;
    for (std::size_t s = 0; s < post.size(); ++s) {
      const double v = post.weights()[s];
      if (v > 0.0 && s != t) excess += v * (mu - spec.mean(ParamId{s}, x, a));
    }
    regret += w * excess;
  }
  return std::max(regret, 0.0);
}

namespace detail {

// KL(Ber(p) || Ber(q)) through log1p of the relative gap; stays accurate when
// p and q agree to many digits.
inline double bernoulli_kl_near(double p, double q) {
  if (p == q) return 0.0;
  if (q <= 0.0 || q >= 1.0) return bernoulli_kl(p, q);
  const double d = p - q;
  double kl = 0.0;
  if (p > 0.0) kl += p * std::log1p(d / q);
  if (p < 1.0) kl += (1.0 - p) * std::log1p(-d / (1.0 - q));
  return std::max(kl, 0.0);
}

inline QuadratureRule reward_rule(const ProblemSpec& spec, ContextId x, ActionId a) {
  return std::visit(
      [&](const auto& k) -> QuadratureRule {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, TruncatedLaplace>) {
          std::vector<double> kinks(spec.num_params());
          for (std::size_t t = 0; t < spec.num_params(); ++t) kinks[t] = spec.location(ParamId{t}, x, a);
          return composite_gauss_legendre(0.0, spec.reward_range(), kPanels, kinks);
        } else if constexpr (std::is_same_v<K, LinearGaussian>) {
          double lo = INFINITY, hi = -INFINITY;
          for (std::size_t t = 0; t < spec.num_params(); ++t) {
            lo = std::min(lo, spec.mean(ParamId{t}, x, a));
            hi = std::max(hi, spec.mean(ParamId{t}, x, a));
          }
          const double width = kGaussianTailWidth * std::sqrt(k.noise_variance);
          return composite_gauss_legendre(lo - width, hi + width, kPanels);
        } else {
          throw std::logic_error("reward_rule: binary rewards need no quadrature");
        }
      },
      spec.kernel());
}

}  // namespace detail

/// Sum_theta w(theta) KL(P(R | x, a, theta) || Sum_theta' w(theta') P(R | x, a, theta')):
/// information the reward of action a carries about the parameter.
inline double action_information(const ProblemSpec& spec, std::span<const double> w, ContextId x, ActionId a) {
  spec.check(x);
  spec.check(a);
  if (spec.binary_rewards()) {
    double q = 0.0;
    for (std::size_t t = 0; t < w.size(); ++t)
      if (w[t] > 0.0) q += w[t] * spec.mean(ParamId{t}, x, a);
    q = std::clamp(q, 0.0, 1.0);
    double info = 0.0;
    for (std::size_t t = 0; t < w.size(); ++t)
      if (w[t] > 0.0) info += w[t] * detail::bernoulli_kl_near(spec.mean(ParamId{t}, x, a), q);
    return info;
  }
  const QuadratureRule rule = detail::reward_rule(spec, x, a);
  const std::size_t n = rule.nodes.size();
  std::vector<double> logd(w.size() * n, -std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (w[t] <= 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) logd[t * n + i] = log_likelihood(spec, ParamId{t}, x, a, rule.nodes[i]);
  }
  return mixture_kl_quadrature(rule, logd, w);
}

/// I_t(Theta; R_t | A_t) in nats, with P_t(A_t = a) given by optimality_probs.
inline double disintegrated_mi(const ProblemSpec& spec, const PosteriorState& post, ContextId x) {
  const auto probs = optimality_probs(spec, post, x);
  double mi = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a)
    if (probs[a] > 0.0) mi += probs[a] * action_information(spec, post.weights(), x, ActionId{a});
  return std::max(mi, 0.0);
}

/// Gamma = regret^2 / information, taken as 0 when the information vanishes.
inline double lifted_ratio(double expected_regret, double information) {
  if (!(information > 0.0)) return 0.0;
  return expected_regret * expected_regret / information;
}

inline double lifted_info_ratio(const ProblemSpec& spec, const PosteriorState& post, ContextId x) {
  return lifted_ratio(expected_round_regret(spec, post, x), disintegrated_mi(spec, post, x));
}

inline RoundDiagnostics diagnose(const ProblemSpec& spec, const PosteriorState& post, ContextId x) {
  RoundDiagnostics d;
  d.expected_regret = expected_round_regret(spec, post, x);
  d.disintegrated_mi = disintegrated_mi(spec, post, x);
  d.lifted_ratio = lifted_ratio(d.expected_regret, d.disintegrated_mi);
  d.kl_to_prior = kl_to_prior(post, spec);
  d.round_index = post.round_index();
  return d;
}

}  // namespace tslab

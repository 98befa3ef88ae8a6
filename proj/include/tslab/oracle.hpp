#pragma once

// Brute-force reference computations used by the test suites and the `verify`
// command. Nothing here calls into posterior.hpp or info_metrics.hpp: every
// quantity is rebuilt from explicit joint distributions.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tslab/problem.hpp"

namespace tslab::oracle {

/// Exhaustive argmax of the exact means, smallest index on ties.
inline std::size_t argmax_action(const ProblemSpec& spec, std::size_t t, std::size_t x) {
  std::size_t best = 0;
  double best_mean = expected_reward(spec, ParamId{t}, ContextId{x}, ActionId{0});
  for (std::size_t a = 1; a < spec.num_actions(); ++a) {
    const double m = expected_reward(spec, ParamId{t}, ContextId{x}, ActionId{a});
    if (m > best_mean) {
      best_mean = m;
      best = a;
    }
  }
  return best;
}

/// Posterior after a binary-reward history, read off the explicit joint
/// table over (Theta, r_1, ..., r_n) with (x_s, a_s) held at their observed
/// values. Limited to n <= 20 observations.
inline std::vector<double> joint_posterior(const ProblemSpec& spec, const History& history) {
  if (!spec.binary_rewards()) throw std::invalid_argument("joint_posterior: binary rewards only");
  const std::size_t n = history.size();
  if (n > 20) throw std::invalid_argument("joint_posterior: history too long to enumerate");
  const std::size_t rows = std::size_t{1} << n;
  const std::size_t n_params = spec.num_params();
  std::vector<double> joint(n_params * rows, 0.0);
  for (std::size_t t = 0; t < n_params; ++t)
    for (std::size_t row = 0; row < rows; ++row) {
      double p = spec.prior()[t];
      for (std::size_t s = 0; s < n; ++s) {
        const double r = ((row >> s) & 1u) ? 1.0 : 0.0;
        p *= likelihood(spec, ParamId{t}, history[s].context, history[s].action, r);
      }
      joint[t * rows + row] = p;
    }
  std::size_t observed = 0;
  for (std::size_t s = 0; s < n; ++s)
    if (history[s].reward == 1.0) observed |= std::size_t{1} << s;
  double marginal = 0.0;
  for (std::size_t t = 0; t < n_params; ++t) marginal += joint[t * rows + observed];
  if (!(marginal > 0.0)) throw std::domain_error("joint_posterior: observed history has zero probability");
  std::vector<double> post(n_params);
  for (std::size_t t = 0; t < n_params; ++t) post[t] = joint[t * rows + observed] / marginal;
  return post;
}

/// Posterior from the direct product of likelihoods (any kernel).
inline std::vector<double> product_posterior(const ProblemSpec& spec, const History& history) {
  std::vector<double> post(spec.num_params());
  double total = 0.0;
  for (std::size_t t = 0; t < post.size(); ++t) {
    double p = spec.prior()[t];
    for (const auto& obs : history) p *= likelihood(spec, ParamId{t}, obs.context, obs.action, obs.reward);
    post[t] = p;
    total += p;
  }
  if (!(total > 0.0)) throw std::domain_error("product_posterior: history has zero probability");
  for (double& p : post) p /= total;
  return post;
}

/// P(A_hat = a) by enumerating the sampled parameter.
inline std::vector<double> optimality_probs(const ProblemSpec& spec, std::span<const double> w, std::size_t x) {
  std::vector<double> probs(spec.num_actions(), 0.0);
  for (std::size_t s = 0; s < w.size(); ++s) probs[argmax_action(spec, s, x)] += w[s];
  return probs;
}

/// E[mu(Theta, psi*(Theta)) - mu(Theta, psi*(Theta_hat))] over independent
/// (Theta, Theta_hat) pairs drawn from w.
inline double expected_regret(const ProblemSpec& spec, std::span<const double> w, std::size_t x) {
  double total = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    const double best = expected_reward(spec, ParamId{t}, ContextId{x}, ActionId{argmax_action(spec, t, x)});
    for (std::size_t s = 0; s < w.size(); ++s) {
      const std::size_t played = argmax_action(spec, s, x);
      total += w[t] * w[s] * (best - expected_reward(spec, ParamId{t}, ContextId{x}, ActionId{played}));
    }
  }
  return total;
}

/// I(Theta; R | A) from the explicit joint table P(theta, a, r), binary rewards.
inline double binary_mutual_information(const ProblemSpec& spec, std::span<const double> w, std::size_t x) {
  const auto pa = optimality_probs(spec, w, x);
  const std::size_t n_params = w.size();
  const std::size_t n_actions = spec.num_actions();
  // joint[t][a][r]
  std::vector<double> joint(n_params * n_actions * 2, 0.0);
  for (std::size_t t = 0; t < n_params; ++t)
    for (std::size_t a = 0; a < n_actions; ++a)
      for (int r = 0; r < 2; ++r)
        joint[(t * n_actions + a) * 2 + r] =
            w[t] * pa[a] * likelihood(spec, ParamId{t}, ContextId{x}, ActionId{a}, static_cast<double>(r));
  double mi = 0.0;
  for (std::size_t a = 0; a < n_actions; ++a) {
    if (pa[a] <= 0.0) continue;
    double p_ar[2] = {0.0, 0.0};
    for (std::size_t t = 0; t < n_params; ++t)
      for (int r = 0; r < 2; ++r) p_ar[r] += joint[(t * n_actions + a) * 2 + r];
    for (std::size_t t = 0; t < n_params; ++t) {
      const double p_ta = w[t] * pa[a];
      for (int r = 0; r < 2; ++r) {
        const double p = joint[(t * n_actions + a) * 2 + r];
        if (p > 0.0) mi += p * std::log(p * pa[a] / (p_ta * p_ar[r]));
      }
    }
  }
  return mi;
}

namespace detail {

template <class F>
double integrate_pieces(F f, std::vector<double> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, edges[i], edges[i + 1], 15, 1e-10);
  return total;
}

}  // namespace detail

/// I(Theta; R | A) for continuous rewards via the entropy decomposition
/// h(R | A) - h(R | Theta, A), each term by adaptive Gauss-Kronrod split at the
/// density kinks.
inline double continuous_mutual_information(const ProblemSpec& spec, std::span<const double> w, std::size_t x) {
  const auto pa = optimality_probs(spec, w, x);
  const bool gaussian = std::holds_alternative<LinearGaussian>(spec.kernel());
  double mi = 0.0;
  for (std::size_t a = 0; a < spec.num_actions(); ++a) {
    if (pa[a] <= 0.0) continue;
    const ActionId act{a};
    const ContextId ctx{x};
    std::vector<double> edges;
    double lo = 0.0, hi = spec.reward_range();
    if (gaussian) {
      const double sd = std::sqrt(std::get<LinearGaussian>(spec.kernel()).noise_variance);
      lo = INFINITY;
      hi = -INFINITY;
      for (std::size_t t = 0; t < w.size(); ++t) {
        lo = std::min(lo, spec.mean(ParamId{t}, ctx, act));
        hi = std::max(hi, spec.mean(ParamId{t}, ctx, act));
      }
      lo -= 12.0 * sd;
      hi += 12.0 * sd;
    }
    edges.push_back(lo);
    edges.push_back(hi);
    for (std::size_t t = 0; t < w.size(); ++t) {
      const double loc = spec.location(ParamId{t}, ctx, act);
      if (loc > lo && loc < hi) edges.push_back(loc);
    }
    auto density = [&](std::size_t t, double r) { return likelihood(spec, ParamId{t}, ctx, act, r); };
    auto mixture_entropy_integrand = [&](double r) {
      double g = 0.0;
      for (std::size_t t = 0; t < w.size(); ++t)
        if (w[t] > 0.0) g += w[t] * density(t, r);
      return g > 0.0 ? -g * std::log(g) : 0.0;
    };
    double conditional = 0.0;
    for (std::size_t t = 0; t < w.size(); ++t) {
      if (w[t] <= 0.0) continue;
      auto integrand = [&](double r) {
        const double f = density(t, r);
        return f > 0.0 ? -f * std::log(f) : 0.0;
      };
      conditional += w[t] * detail::integrate_pieces(integrand, edges);
    }
    mi += pa[a] * (detail::integrate_pieces(mixture_entropy_integrand, edges) - conditional);
  }
  return mi;
}

inline double mutual_information(const ProblemSpec& spec, std::span<const double> w, std::size_t x) {
  return spec.binary_rewards() ? binary_mutual_information(spec, w, x) : continuous_mutual_information(spec, w, x);
}

}  // namespace tslab::oracle

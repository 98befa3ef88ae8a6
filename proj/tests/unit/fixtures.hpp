#pragma once

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tslab/problem.hpp"

namespace tslab::testing {

inline std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

/// Bernoulli table spec; `success` is theta-major p[theta][x][a].
inline ProblemSpec table_spec(std::vector<double> success, std::size_t params, std::size_t contexts,
                              std::size_t actions, std::vector<double> prior = {}) {
  ProblemDefinition def;
  def.params.assign(params, {});
  def.prior = prior.empty() ? uniform(params) : std::move(prior);
  def.context_weights = uniform(contexts);
  def.num_actions = actions;
  def.kernel = BernoulliTable{std::move(success)};
  return ProblemSpec(std::move(def));
}

/// Two parameters, two actions, one context, means swapped: theta_1 = (0.8, 0.2),
/// theta_2 = (0.2, 0.8).
inline ProblemSpec swapped_spec() { return table_spec({0.8, 0.2, 0.2, 0.8}, 2, 1, 2); }

/// One-dimensional feature families with m(x, a) = 1, so the location of
/// parameter t is params[t][0].
inline ProblemDefinition scalar_definition(std::vector<double> locations, RewardKernel kernel, double range = 1.0) {
  ProblemDefinition def;
  for (double f : locations) def.params.push_back({f});
  def.prior = uniform(locations.size());
  def.context_weights = {1.0};
  def.num_actions = 1;
  def.kernel = kernel;
  def.reward_range = range;
  def.features = FeatureMap(1, 1, 1, {1.0});
  return def;
}

inline ProblemSpec laplace_spec(std::vector<double> locations, double scale, double range = 1.0) {
  return ProblemSpec(scalar_definition(std::move(locations), TruncatedLaplace{scale}, range));
}

inline ProblemSpec gaussian_spec(std::vector<double> locations, double noise_variance) {
  return ProblemSpec(scalar_definition(std::move(locations), LinearGaussian{noise_variance}));
}

template <class F>
double integrate(F f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-12);
}

}  // namespace tslab::testing

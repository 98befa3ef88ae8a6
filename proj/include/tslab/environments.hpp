#pragma once

// Seeded constructors for the four problem families.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tslab/problem.hpp"
#include "tslab/rng.hpp"

namespace tslab {

enum class Family { bernoulli_table, logistic_linear, truncated_laplace, linear_gaussian };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::bernoulli_table: return "bernoulli-table";
    case Family::logistic_linear: return "logistic-linear";
    case Family::truncated_laplace: return "truncated-laplace";
    case Family::linear_gaussian: return "linear-gaussian";
  }
  return "?";
}

struct FamilyConfig {
  Family family = Family::bernoulli_table;
  std::size_t num_params = 1;  // bernoulli-table without a grid
  std::size_t num_contexts = 1;
  std::size_t num_actions = 1;
  std::size_t dim = 1;

  double reward_range = 1.0;
  double laplace_scale = 1.0;
  double noise_variance = 1.0;
  Link link = Link::logistic;
  double link_alpha = 1.0;

  // Parameter grid: explicit list, or a box grid on [grid_lo, grid_hi]^d with
  // grid_resolution points per axis, optionally cut to a ball of diameter
  // grid_diameter around the box centre.
  std::vector<std::vector<double>> params;
  double grid_lo = -1.0;
  double grid_hi = 1.0;
  std::size_t grid_resolution = 2;
  std::optional<double> grid_diameter;

  // Features drawn uniformly on [feature_lo, feature_hi]^d unless given
  // explicitly (context-major, then action, then coordinate).
  double feature_lo = 0.0;
  double feature_hi = 1.0;
  std::vector<double> features;

  // bernoulli-table only: success probabilities <theta, m(x, a)> instead of an
  // i.i.d. uniform table; or an explicit table.
  bool linear_means = false;
  std::vector<double> table;

  std::vector<double> prior;            // default uniform
  std::vector<double> context_weights;  // default uniform
  std::optional<double> subgaussian_proxy;
};

namespace detail {

inline Rng env_stream(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x656e76u};
  return Rng(seq);
}

inline double uniform_between(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::vector<double> uniform_weights(std::size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

inline std::vector<std::vector<double>> build_grid(const FamilyConfig& cfg) {
  if (!cfg.params.empty()) {
    for (const auto& p : cfg.params)
      if (p.size() != cfg.dim) throw std::invalid_argument("problem.params: every point must have dimension dim");
    return cfg.params;
  }
  if (cfg.dim == 0) throw std::invalid_argument("problem.dim: must be >= 1");
  if (cfg.grid_resolution == 0) throw std::invalid_argument("problem.grid_resolution: must be >= 1");
  if (!(cfg.grid_hi >= cfg.grid_lo)) throw std::invalid_argument("problem.grid_hi: must be >= grid_lo");
  const std::size_t n = cfg.grid_resolution;
  auto axis = [&](std::size_t i) {
    if (n == 1) return 0.5 * (cfg.grid_lo + cfg.grid_hi);
    return cfg.grid_lo + (cfg.grid_hi - cfg.grid_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  const double centre = 0.5 * (cfg.grid_lo + cfg.grid_hi);
  std::vector<std::vector<double>> grid;
  std::vector<std::size_t> idx(cfg.dim, 0);
  while (true) {
    std::vector<double> p(cfg.dim);
    double sq = 0.0;
    for (std::size_t k = 0; k < cfg.dim; ++k) {
      p[k] = axis(idx[k]);
      sq += (p[k] - centre) * (p[k] - centre);
    }
    if (!cfg.grid_diameter || std::sqrt(sq) <= 0.5 * *cfg.grid_diameter + 1e-12) grid.push_back(std::move(p));
    std::size_t k = 0;
    while (k < cfg.dim && ++idx[k] == n) idx[k++] = 0;
    if (k == cfg.dim) break;
  }
  if (grid.empty()) throw std::invalid_argument("problem.grid_diameter: no grid point inside the ball");
  return grid;
}

inline FeatureMap build_features(const FamilyConfig& cfg, Rng& rng) {
  if (cfg.num_contexts == 0 || cfg.num_actions == 0)
    throw std::invalid_argument("problem: num_contexts and num_actions must be >= 1");
  if (!cfg.features.empty())
    return FeatureMap(cfg.num_contexts, cfg.num_actions, cfg.dim, cfg.features);
  if (!(cfg.feature_hi >= cfg.feature_lo)) throw std::invalid_argument("problem.feature_hi: must be >= feature_lo");
  std::vector<double> data(cfg.num_contexts * cfg.num_actions * cfg.dim);
  for (double& v : data) v = uniform_between(rng, cfg.feature_lo, cfg.feature_hi);
  return FeatureMap(cfg.num_contexts, cfg.num_actions, cfg.dim, std::move(data));
}

inline ProblemDefinition base_definition(const FamilyConfig& cfg, std::size_t n_params) {
  ProblemDefinition def;
  def.prior = cfg.prior.empty() ? uniform_weights(n_params) : cfg.prior;
  if (cfg.num_contexts == 0) throw std::invalid_argument("problem.num_contexts: must be >= 1");
  def.context_weights = cfg.context_weights.empty() ? uniform_weights(cfg.num_contexts) : cfg.context_weights;
  def.num_actions = cfg.num_actions;
  def.reward_range = cfg.reward_range;
  def.subgaussian_proxy = cfg.subgaussian_proxy;
  return def;
}

}  // namespace detail

/// Bounded unstructured family: Bernoulli rewards with an i.i.d. uniform
/// success table, an explicit table, or linear success probabilities.
inline ProblemSpec make_unstructured(const FamilyConfig& cfg, std::uint64_t seed) {
  if (cfg.num_actions == 0) throw std::invalid_argument("problem.num_actions: must be >= 1");
  Rng rng = detail::env_stream(seed);
  if (cfg.linear_means) {
    auto grid = detail::build_grid(cfg);
    FeatureMap fm = detail::build_features(cfg, rng);
    ProblemDefinition def = detail::base_definition(cfg, grid.size());
    std::vector<double> success;
    success.reserve(grid.size() * cfg.num_contexts * cfg.num_actions);
    for (const auto& th : grid)
      for (std::size_t x = 0; x < cfg.num_contexts; ++x)
        for (std::size_t a = 0; a < cfg.num_actions; ++a) {
          const double p = dot(th, fm.at(ContextId{x}, ActionId{a}));
          if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("problem: linear success probability outside [0,1]; shrink the grid or features");
          success.push_back(p);
        }
    def.params = std::move(grid);
    def.kernel = BernoulliTable{std::move(success)};
    def.features = std::move(fm);
    return ProblemSpec(std::move(def));
  }
  if (cfg.num_params == 0) throw std::invalid_argument("problem.num_params: must be >= 1");
  ProblemDefinition def = detail::base_definition(cfg, cfg.num_params);
  const std::size_t cells = cfg.num_params * cfg.num_contexts * cfg.num_actions;
  std::vector<double> success = cfg.table;
  if (success.empty()) {
    success.resize(cells);
    for (double& p : success) p = uniform01(rng);
  }
  def.kernel = BernoulliTable{std::move(success)};
  return ProblemSpec(std::move(def));
}

inline ProblemSpec make_logistic_bernoulli(const FamilyConfig& cfg, std::uint64_t seed) {
  if (cfg.link == Link::generalized_logistic && !(cfg.link_alpha > 0.0))
    throw std::invalid_argument("problem.link_alpha: must be > 0");
  Rng rng = detail::env_stream(seed);
  auto grid = detail::build_grid(cfg);
  ProblemDefinition def = detail::base_definition(cfg, grid.size());
  def.features = detail::build_features(cfg, rng);
  def.params = std::move(grid);
  def.kernel = LogisticLinear{cfg.link, cfg.link_alpha};
  def.reward_range = 1.0;
  return ProblemSpec(std::move(def));
}

inline ProblemSpec make_laplace(const FamilyConfig& cfg, std::uint64_t seed) {
  if (!(cfg.laplace_scale > 0.0)) throw std::invalid_argument("problem.laplace_scale: must be > 0");
  Rng rng = detail::env_stream(seed);
  auto grid = detail::build_grid(cfg);
  ProblemDefinition def = detail::base_definition(cfg, grid.size());
  def.features = detail::build_features(cfg, rng);
  def.params = std::move(grid);
  def.kernel = TruncatedLaplace{cfg.laplace_scale};
  return ProblemSpec(std::move(def));
}

inline ProblemSpec make_linear_gaussian(const FamilyConfig& cfg, std::uint64_t seed) {
  if (!(cfg.noise_variance > 0.0)) throw std::invalid_argument("problem.noise_variance: must be > 0");
  Rng rng = detail::env_stream(seed);
  auto grid = detail::build_grid(cfg);
  ProblemDefinition def = detail::base_definition(cfg, grid.size());
  def.features = detail::build_features(cfg, rng);
  def.params = std::move(grid);
  def.kernel = LinearGaussian{cfg.noise_variance};
  return ProblemSpec(std::move(def));
}

inline ProblemSpec make_problem(const FamilyConfig& cfg, std::uint64_t seed) {
  switch (cfg.family) {
    case Family::bernoulli_table: return make_unstructured(cfg, seed);
    case Family::logistic_linear: return make_logistic_bernoulli(cfg, seed);
    case Family::truncated_laplace: return make_laplace(cfg, seed);
    case Family::linear_gaussian: return make_linear_gaussian(cfg, seed);
  }
  throw std::invalid_argument("problem.family: unknown family");
}

// ---------------------------------------------------------------------------
// Geometry recorded for the covering-number bounds

/// Euclidean diameter of the parameter support (0 for a single point or
/// opaque labels).
inline double parameter_diameter(const ProblemSpec& spec) {
  double best = 0.0;
  const auto& ps = spec.params();
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      if (ps[i].size() != ps[j].size()) continue;
      double sq = 0.0;
      for (std::size_t k = 0; k < ps[i].size(); ++k) sq += (ps[i][k] - ps[j][k]) * (ps[i][k] - ps[j][k]);
      best = std::max(best, std::sqrt(sq));
    }
  return best;
}

/// B = max ||m(x, a)||; 0 without a feature map.
inline double feature_bound(const ProblemSpec& spec) {
  return spec.features() ? spec.features()->max_norm() : 0.0;
}

/// Lipschitz constant of theta -> f_theta(x, a) = <theta, m(x, a)>, i.e. B.
inline double location_lipschitz(const ProblemSpec& spec) { return feature_bound(spec); }

/// E[C]: Lipschitz constant of theta -> log-likelihood, when the family has a
/// uniform one. Logistic links give B times the link's log-Lipschitz constant;
/// Laplace gives B / beta (untruncated density).
inline std::optional<double> loglik_lipschitz(const ProblemSpec& spec) {
  if (const auto* k = std::get_if<LogisticLinear>(&spec.kernel()))
    return feature_bound(spec) * link_log_lipschitz(k->link, k->alpha);
  if (const auto* k = std::get_if<TruncatedLaplace>(&spec.kernel())) return feature_bound(spec) / k->scale;
  return std::nullopt;
}

}  // namespace tslab

#pragma once

// Finite Bayesian contextual bandit: parameter support with a prior, a context
// distribution, and a reward kernel R(x, a, theta). Every support is finite so
// that means, likelihoods and posteriors are exact.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "tslab/rng.hpp"

namespace tslab {

template <class Tag>
struct Index {
  std::size_t value = 0;
  constexpr Index() noexcept = default;
  constexpr explicit Index(std::size_t v) noexcept : value(v) {}
  friend constexpr auto operator<=>(Index, Index) = default;
};

struct ParamTag {};
struct ContextTag {};
struct ActionTag {};
using ParamId = Index<ParamTag>;
using ContextId = Index<ContextTag>;
using ActionId = Index<ActionTag>;

struct Observation {
  ContextId context;
  ActionId action;
  double reward = 0.0;
};
using History = std::vector<Observation>;

/// Feature table m(x, a) in R^d, stored context-major.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t contexts, std::size_t actions, std::size_t dim, std::vector<double> data)
      : contexts_(contexts), actions_(actions), dim_(dim), data_(std::move(data)) {
    if (contexts_ == 0 || actions_ == 0 || dim_ == 0)
      throw std::invalid_argument("FeatureMap: sizes must be >= 1");
    if (data_.size() != contexts_ * actions_ * dim_)
      throw std::invalid_argument("FeatureMap: data size does not match contexts*actions*dim");
  }

  std::size_t contexts() const noexcept { return contexts_; }
  std::size_t actions() const noexcept { return actions_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> at(ContextId x, ActionId a) const {
    if (x.value >= contexts_ || a.value >= actions_)
      throw std::out_of_range("FeatureMap::at: index out of range");
    return {data_.data() + (x.value * actions_ + a.value) * dim_, dim_};
  }

  /// Largest Euclidean norm over all (x, a).
  double max_norm() const {
    double best = 0.0;
    for (std::size_t i = 0; i < contexts_ * actions_; ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) sq += data_[i * dim_ + k] * data_[i * dim_ + k];
      best = std::max(best, std::sqrt(sq));
    }
    return best;
  }

 private:
  std::size_t contexts_ = 0;
  std::size_t actions_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

// ---------------------------------------------------------------------------
// Reward kernels

enum class Link { logistic, generalized_logistic, algebraic_logistic };

/// Success probabilities p[theta][x][a], theta-major.
struct BernoulliTable {
  std::vector<double> success;
};

/// Bernoulli reward with success probability link(<theta, m(x, a)>).
struct LogisticLinear {
  Link link = Link::logistic;
  double alpha = 1.0;  // generalized-logistic exponent
};

/// Laplace density with location <theta, m(x, a)> truncated and renormalized on [0, L].
struct TruncatedLaplace {
  double scale = 1.0;
};

/// Gaussian noise around <theta, m(x, a)>; unbounded rewards.
struct LinearGaussian {
  double noise_variance = 1.0;
};

using RewardKernel = std::variant<BernoulliTable, LogisticLinear, TruncatedLaplace, LinearGaussian>;

inline std::string family_name(const RewardKernel& k) {
  switch (k.index()) {
    case 0: return "bernoulli-table";
    case 1: return "logistic-linear";
    case 2: return "truncated-laplace";
    default: return "linear-gaussian";
  }
}

inline std::string link_name(Link link) {
  switch (link) {
    case Link::logistic: return "logistic";
    case Link::generalized_logistic: return "generalized-logistic";
    case Link::algebraic_logistic: return "algebraic-logistic";
  }
  return "?";
}

namespace detail {

// log(sigmoid(z)) without overflow
inline double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

// log(0.5 * (1 + z / sqrt(1 + z^2))), stable for very negative z
inline double log_algebraic(double z) {
  const double s = std::hypot(1.0, z);
  if (z >= 0.0) return std::log(0.5 * (1.0 + z / s));
  return std::log(0.5 / (s * (s - z)));
}

}  // namespace detail

inline double link_value(Link link, double alpha, double z) {
  switch (link) {
    case Link::logistic: return std::exp(detail::log_sigmoid(z));
    case Link::generalized_logistic: return std::exp(alpha * detail::log_sigmoid(z));
    case Link::algebraic_logistic: return std::exp(detail::log_algebraic(z));
  }
  return 0.0;
}

/// log P(r | z) for a Bernoulli reward with success probability link(z).
inline double link_log_prob(Link link, double alpha, double z, bool success) {
  switch (link) {
    case Link::logistic: return success ? detail::log_sigmoid(z) : detail::log_sigmoid(-z);
    case Link::generalized_logistic: {
      const double lp = alpha * detail::log_sigmoid(z);
      if (success) return lp;
      return std::log(-std::expm1(lp));
    }
    case Link::algebraic_logistic: return detail::log_algebraic(success ? z : -z);
  }
  return 0.0;
}

/// Lipschitz constant of z -> log P(r | z), maximized over r in {0, 1}.
/// For the generalized link, log sigma^alpha is alpha-Lipschitz while
/// log(1 - sigma^alpha) is 1-Lipschitz, hence max(alpha, 1).
inline double link_log_lipschitz(Link link, double alpha) {
  switch (link) {
    case Link::logistic: return 1.0;
    case Link::generalized_logistic: return std::max(alpha, 1.0);
    case Link::algebraic_logistic: return 2.0;
  }
  return 0.0;
}

namespace laplace {

// Closed forms for exp(-|r - f| / scale) restricted to [0, width].

inline double log_normalizer(double f, double scale, double width) {
  const double tail = std::log(-std::expm1(-width / scale));
  if (f <= 0.0) return std::log(scale) + f / scale + tail;
  if (f >= width) return std::log(scale) - (f - width) / scale + tail;
  return std::log(scale * (-std::expm1(-f / scale) - std::expm1(-(width - f) / scale)));
}

inline double mean(double f, double scale, double width) {
  if (f <= 0.0 || f >= width) {
    // exponential tail truncated to an interval of length `width`
    const double e = std::exp(-width / scale);
    const double off = (scale - e * (width + scale)) / (-std::expm1(-width / scale));
    return f <= 0.0 ? off : width - off;
  }
  auto g = [scale](double u) { return std::exp(-u / scale) * (u + scale); };
  const double z = std::exp(log_normalizer(f, scale, width));
  return f + scale * (g(f) - g(width - f)) / z;
}

/// Inverse CDF of the truncated density; u in [0, 1).
inline double quantile(double f, double scale, double width, double u) {
  double r = 0.0;
  if (f <= 0.0 || f >= width) {
    const double off = -scale * std::log1p(u * std::expm1(-width / scale));
    r = f <= 0.0 ? off : width - off;
  } else {
    const double z = std::exp(log_normalizer(f, scale, width));
    const double target = u * z;
    const double left_mass = -scale * std::expm1(-f / scale);
    if (target <= left_mass)
      r = f + scale * std::log(target / scale + std::exp(-f / scale));
    else
      r = f - scale * std::log1p(-(target - left_mass) / scale);
  }
  return std::clamp(r, 0.0, width);
}

}  // namespace laplace

// ---------------------------------------------------------------------------
// Problem specification

/// Plain description consumed by ProblemSpec's validating constructor.
struct ProblemDefinition {
  /// One descriptor per parameter; vectors in R^d for feature-based kernels,
  /// may be empty for bernoulli-table (opaque labels).
  std::vector<std::vector<double>> params;
  std::vector<double> prior;
  std::vector<double> context_weights;
  std::size_t num_actions = 0;
  RewardKernel kernel;
  double reward_range = 1.0;
  std::optional<double> subgaussian_proxy;
  std::optional<FeatureMap> features;
};

class ProblemSpec {
 public:
  static constexpr double kProbabilityTolerance = 1e-12;

  explicit ProblemSpec(ProblemDefinition def) : def_(std::move(def)) {
    validate_and_cache();
  }

  std::size_t num_params() const noexcept { return def_.prior.size(); }
  std::size_t num_contexts() const noexcept { return def_.context_weights.size(); }
  std::size_t num_actions() const noexcept { return def_.num_actions; }
  std::size_t dim() const noexcept { return def_.features ? def_.features->dim() : 0; }

  std::span<const double> prior() const noexcept { return def_.prior; }
  std::span<const double> context_weights() const noexcept { return def_.context_weights; }
  const std::vector<std::vector<double>>& params() const noexcept { return def_.params; }
  std::span<const double> param(ParamId t) const {
    check(t);
    return def_.params[t.value];
  }
  const RewardKernel& kernel() const noexcept { return def_.kernel; }
  const std::optional<FeatureMap>& features() const noexcept { return def_.features; }
  double reward_range() const noexcept { return def_.reward_range; }
  const ProblemDefinition& definition() const noexcept { return def_; }

  bool bounded() const noexcept { return !std::holds_alternative<LinearGaussian>(def_.kernel); }
  bool binary_rewards() const noexcept {
    return std::holds_alternative<BernoulliTable>(def_.kernel) ||
           std::holds_alternative<LogisticLinear>(def_.kernel);
  }
  /// True when E[R(x, a, theta)] = <theta, m(x, a)> for every cell.
  bool linear_means() const noexcept { return linear_means_; }

  /// sigma^2: L^2/4 for bounded kernels, the noise variance for gaussian ones,
  /// unless overridden.
  double subgaussian_proxy() const noexcept { return proxy_; }

  /// Proxy valid for the posterior-predictive mixture of rewards at any (x, a).
  /// Equal to subgaussian_proxy() for bounded kernels; for gaussian kernels adds
  /// a quarter of the squared spread of the means across the parameter support.
  double predictive_subgaussian_proxy() const noexcept { return predictive_proxy_; }

  double mean(ParamId t, ContextId x, ActionId a) const {
    check(t, x, a);
    return means_[cell(t, x, a)];
  }
  ActionId best_action(ParamId t, ContextId x) const {
    check(t);
    check(x);
    return ActionId{best_[t.value * num_contexts() + x.value]};
  }
  /// Location <theta, m(x, a)> for feature kernels.
  double location(ParamId t, ContextId x, ActionId a) const {
    check(t, x, a);
    return locations_.at(cell(t, x, a));
  }
  double log_normalizer(ParamId t, ContextId x, ActionId a) const {
    check(t, x, a);
    return log_normalizers_.at(cell(t, x, a));
  }

  void check(ParamId t) const {
    if (t.value >= num_params()) throw std::out_of_range("parameter index out of range");
  }
  void check(ContextId x) const {
    if (x.value >= num_contexts()) throw std::out_of_range("context index out of range");
  }
  void check(ActionId a) const {
    if (a.value >= num_actions()) throw std::out_of_range("action index out of range");
  }
  void check(ParamId t, ContextId x, ActionId a) const {
    check(t);
    check(x);
    check(a);
  }

 private:
  std::size_t cell(ParamId t, ContextId x, ActionId a) const noexcept {
    return (t.value * num_contexts() + x.value) * num_actions() + a.value;
  }

  static void check_probability_vector(std::span<const double> w, const char* what) {
    if (w.empty()) throw std::invalid_argument(std::string(what) + ": must be non-empty");
    double sum = 0.0;
    for (double v : w) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string(what) + ": entries must be finite and >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance)
      throw std::invalid_argument(std::string(what) + ": must sum to 1");
  }

  void validate_and_cache() {
    check_probability_vector(def_.prior, "prior_weights");
    check_probability_vector(def_.context_weights, "context_weights");
    const std::size_t n_params = def_.prior.size();
    if (def_.params.empty()) def_.params.resize(n_params);
    if (def_.params.size() != n_params)
      throw std::invalid_argument("param_support: size must match prior_weights");

    const bool needs_features = !std::holds_alternative<BernoulliTable>(def_.kernel);
    if (needs_features && !def_.features)
      throw std::invalid_argument("feature_map: required by the " + family_name(def_.kernel) + " kernel");
    if (def_.features) {
      if (def_.features->contexts() != num_contexts())
        throw std::invalid_argument("feature_map: context count mismatch");
      if (def_.num_actions == 0) def_.num_actions = def_.features->actions();
      if (def_.features->actions() != def_.num_actions)
        throw std::invalid_argument("feature_map: action count mismatch");
      for (const auto& p : def_.params)
        if (p.size() != def_.features->dim())
          throw std::invalid_argument("param_support: every parameter must have the feature dimension");
    }
    if (def_.num_actions == 0) throw std::invalid_argument("num_actions: must be >= 1");
    if (!(def_.reward_range >= 0.0) || !std::isfinite(def_.reward_range))
      throw std::invalid_argument("reward_range: must be finite and >= 0");

    const std::size_t n_cells = n_params * num_contexts() * num_actions();
    means_.assign(n_cells, 0.0);

    std::visit([&](const auto& k) { cache_kernel(k, n_cells); }, def_.kernel);

    if (def_.subgaussian_proxy) {
      if (!(*def_.subgaussian_proxy > 0.0))
        throw std::invalid_argument("subgaussian_proxy: must be > 0");
      proxy_ = *def_.subgaussian_proxy;
      predictive_proxy_ = proxy_;
    } else if (bounded()) {
      proxy_ = def_.reward_range * def_.reward_range / 4.0;
      predictive_proxy_ = proxy_;
    } else {
      const double noise = std::get<LinearGaussian>(def_.kernel).noise_variance;
      double spread = 0.0;
      for (std::size_t x = 0; x < num_contexts(); ++x)
        for (std::size_t a = 0; a < num_actions(); ++a) {
          double lo = INFINITY, hi = -INFINITY;
          for (std::size_t t = 0; t < n_params; ++t) {
            const double m = means_[cell(ParamId{t}, ContextId{x}, ActionId{a})];
            lo = std::min(lo, m);
            hi = std::max(hi, m);
          }
          spread = std::max(spread, hi - lo);
        }
      proxy_ = noise;
      predictive_proxy_ = noise + spread * spread / 4.0;
    }

    best_.assign(n_params * num_contexts(), 0);
    for (std::size_t t = 0; t < n_params; ++t)
      for (std::size_t x = 0; x < num_contexts(); ++x) {
        const double* row = &means_[(t * num_contexts() + x) * num_actions()];
        std::size_t best = 0;
        for (std::size_t a = 1; a < num_actions(); ++a)
          if (row[a] > row[best]) best = a;
        best_[t * num_contexts() + x] = best;
      }

    linear_means_ = false;
    if (def_.features && !std::holds_alternative<LogisticLinear>(def_.kernel) &&
        !std::holds_alternative<TruncatedLaplace>(def_.kernel)) {
      linear_means_ = true;
      for (std::size_t t = 0; t < n_params && linear_means_; ++t)
        for (std::size_t x = 0; x < num_contexts() && linear_means_; ++x)
          for (std::size_t a = 0; a < num_actions(); ++a) {
            const double lin = dot(def_.params[t], def_.features->at(ContextId{x}, ActionId{a}));
            if (std::abs(lin - means_[cell(ParamId{t}, ContextId{x}, ActionId{a})]) > 1e-12) {
              linear_means_ = false;
              break;
            }
          }
    }
  }

  void fill_locations(std::size_t n_cells) {
    locations_.assign(n_cells, 0.0);
    for (std::size_t t = 0; t < num_params(); ++t)
      for (std::size_t x = 0; x < num_contexts(); ++x)
        for (std::size_t a = 0; a < num_actions(); ++a)
          locations_[cell(ParamId{t}, ContextId{x}, ActionId{a})] =
              dot(def_.params[t], def_.features->at(ContextId{x}, ActionId{a}));
  }

  void cache_kernel(const BernoulliTable& k, std::size_t n_cells) {
    if (k.success.size() != n_cells)
      throw std::invalid_argument("bernoulli-table: table size must be |params|*|contexts|*|actions|");
    for (double p : k.success)
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli-table: entries must lie in [0,1]");
    if (def_.reward_range != 1.0) throw std::invalid_argument("reward_range: must be 1 for bernoulli rewards");
    means_ = k.success;
  }

  void cache_kernel(const LogisticLinear& k, std::size_t n_cells) {
    if (k.link == Link::generalized_logistic && !(k.alpha > 0.0))
      throw std::invalid_argument("link_alpha: generalized-logistic requires alpha > 0");
    if (def_.reward_range != 1.0) throw std::invalid_argument("reward_range: must be 1 for bernoulli rewards");
    fill_locations(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) means_[i] = link_value(k.link, k.alpha, locations_[i]);
  }

  void cache_kernel(const TruncatedLaplace& k, std::size_t n_cells) {
    if (!(k.scale > 0.0)) throw std::invalid_argument("laplace_scale: must be > 0");
    if (!(def_.reward_range > 0.0)) throw std::invalid_argument("reward_range: must be > 0 for laplace rewards");
    fill_locations(n_cells);
    log_normalizers_.assign(n_cells, 0.0);
    for (std::size_t i = 0; i < n_cells; ++i) {
      log_normalizers_[i] = laplace::log_normalizer(locations_[i], k.scale, def_.reward_range);
      means_[i] = laplace::mean(locations_[i], k.scale, def_.reward_range);
    }
  }

  void cache_kernel(const LinearGaussian& k, std::size_t n_cells) {
    if (!(k.noise_variance > 0.0)) throw std::invalid_argument("noise_variance: must be > 0");
    fill_locations(n_cells);
    means_ = locations_;
  }

  ProblemDefinition def_;
  std::vector<double> means_;
  std::vector<double> locations_;
  std::vector<double> log_normalizers_;
  std::vector<std::size_t> best_;
  double proxy_ = 0.0;
  double predictive_proxy_ = 0.0;
  bool linear_means_ = false;
};

// ---------------------------------------------------------------------------
// Operations

inline double expected_reward(const ProblemSpec& spec, ParamId t, ContextId x, ActionId a) {
  return spec.mean(t, x, a);
}

/// psi*(x, theta): argmax of the exact means, ties to the smallest index.
inline ActionId optimal_action(const ProblemSpec& spec, ParamId t, ContextId x) {
  return spec.best_action(t, x);
}

inline double log_likelihood(const ProblemSpec& spec, ParamId t, ContextId x, ActionId a, double r) {
  spec.check(t, x, a);
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, BernoulliTable> || std::is_same_v<K, LogisticLinear>) {
          if (r != 0.0 && r != 1.0) throw std::domain_error("likelihood: bernoulli reward must be 0 or 1");
          if constexpr (std::is_same_v<K, BernoulliTable>) {
            const double p = spec.mean(t, x, a);
            return std::log(r == 1.0 ? p : 1.0 - p);
          } else {
            return link_log_prob(k.link, k.alpha, spec.location(t, x, a), r == 1.0);
          }
        } else if constexpr (std::is_same_v<K, TruncatedLaplace>) {
          if (!(r >= 0.0 && r <= spec.reward_range()))
            throw std::domain_error("likelihood: laplace reward outside [0, L]");
          return -std::abs(r - spec.location(t, x, a)) / k.scale - spec.log_normalizer(t, x, a);
        } else {
          if (!std::isfinite(r)) throw std::domain_error("likelihood: gaussian reward must be finite");
          const double d = r - spec.location(t, x, a);
          return -0.5 * d * d / k.noise_variance - 0.5 * std::log(2.0 * std::numbers::pi * k.noise_variance);
        }
      },
      spec.kernel());
}

/// Probability mass (binary kernels) or density (continuous kernels) of r.
inline double likelihood(const ProblemSpec& spec, ParamId t, ContextId x, ActionId a, double r) {
  return std::exp(log_likelihood(spec, t, x, a, r));
}

inline double sample_reward(const ProblemSpec& spec, Rng& rng, ParamId t, ContextId x, ActionId a) {
  spec.check(t, x, a);
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, BernoulliTable> || std::is_same_v<K, LogisticLinear>) {
          return uniform01(rng) < spec.mean(t, x, a) ? 1.0 : 0.0;
        } else if constexpr (std::is_same_v<K, TruncatedLaplace>) {
          return laplace::quantile(spec.location(t, x, a), k.scale, spec.reward_range(), uniform01(rng));
        } else {
          std::normal_distribution<double> noise(0.0, std::sqrt(k.noise_variance));
          return spec.location(t, x, a) + noise(rng);
        }
      },
      spec.kernel());
}

}  // namespace tslab

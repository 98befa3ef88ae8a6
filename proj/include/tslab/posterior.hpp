#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "tslab/problem.hpp"
#include "tslab/rng.hpp"

namespace tslab {

/// Raised when an observation has zero likelihood under every parameter that
/// still carries posterior mass.
class InconsistentObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact posterior over a finite parameter support, kept in log-space and
/// renormalized after every update.
class PosteriorState {
 public:
  PosteriorState() = default;
  PosteriorState(std::vector<double> log_weights, std::size_t round_index)
      : log_weights_(std::move(log_weights)), round_index_(round_index) {
    refresh_weights();
  }

  std::span<const double> log_weights() const noexcept { return log_weights_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t round_index() const noexcept { return round_index_; }
  std::size_t size() const noexcept { return log_weights_.size(); }

 private:
  void refresh_weights() {
    weights_.resize(log_weights_.size());
    std::transform(log_weights_.begin(), log_weights_.end(), weights_.begin(),
                   [](double lw) { return std::exp(lw); });
  }

  std::vector<double> log_weights_;
  std::vector<double> weights_;
  std::size_t round_index_ = 0;
};

inline PosteriorState init_prior(const ProblemSpec& spec) {
  std::vector<double> lw(spec.num_params());
  std::transform(spec.prior().begin(), spec.prior().end(), lw.begin(), [](double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  });
  return PosteriorState(std::move(lw), 0);
}

/// Bayes step w'(theta) ~ w(theta) * likelihood(theta, x, a, r). Only the
/// observed triple enters; how the action was chosen never does.
inline PosteriorState update(const PosteriorState& state, const ProblemSpec& spec, ContextId x, ActionId a,
                             double r) {
  if (state.size() != spec.num_params()) throw std::invalid_argument("update: posterior/spec size mismatch");
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> lw(state.size());
  double top = neg_inf;
  for (std::size_t t = 0; t < lw.size(); ++t) {
    const double prev = state.log_weights()[t];
    lw[t] = prev == neg_inf ? neg_inf : prev + log_likelihood(spec, ParamId{t}, x, a, r);
    top = std::max(top, lw[t]);
  }
  if (top == neg_inf)
    throw InconsistentObservation("update: observation has zero likelihood under every supported parameter");
  double sum = 0.0;
  for (double v : lw) sum += std::exp(v - top);
  const double log_norm = top + std::log(sum);
  for (double& v : lw) v -= log_norm;
  return PosteriorState(std::move(lw), state.round_index() + 1);
}

/// Shannon entropy in nats, 0 log 0 := 0.
inline double entropy(const PosteriorState& state) {
  double h = 0.0;
  for (std::size_t t = 0; t < state.size(); ++t) {
    const double w = state.weights()[t];
    if (w > 0.0) h -= w * state.log_weights()[t];
  }
  return std::max(h, 0.0);
}

inline double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return std::max(h, 0.0);
}

inline double kl_to_prior(const PosteriorState& state, const ProblemSpec& spec) {
  if (state.size() != spec.num_params()) throw std::invalid_argument("kl_to_prior: posterior/spec size mismatch");
  double kl = 0.0;
  for (std::size_t t = 0; t < state.size(); ++t) {
    const double w = state.weights()[t];
    if (w <= 0.0) continue;
    const double q = spec.prior()[t];
    if (q <= 0.0) throw std::domain_error("kl_to_prior: posterior mass on a zero-prior parameter");
    kl += w * (state.log_weights()[t] - std::log(q));
  }
  return std::max(kl, 0.0);
}

inline ParamId sample_param(const PosteriorState& state, Rng& rng) {
  return ParamId{sample_categorical(state.weights(), rng)};
}

}  // namespace tslab

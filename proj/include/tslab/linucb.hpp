#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "tslab/problem.hpp"

namespace tslab {

struct LinUcbOptions {
  double alpha = 1.0;   // exploration width
  double lambda = 1.0;  // ridge strength
};

/// Ridge statistics A = lambda I + Sum m m^T and b = Sum r m.
struct LinUcbState {
  Eigen::MatrixXd gram;
  Eigen::VectorXd response;
  double alpha = 1.0;
  double lambda = 1.0;

  static LinUcbState fresh(std::size_t dim, LinUcbOptions opts = {}) {
    if (dim == 0) throw std::invalid_argument("linucb: dimension must be >= 1");
    if (!(opts.alpha >= 0.0)) throw std::invalid_argument("linucb: alpha must be >= 0");
    if (!(opts.lambda > 0.0)) throw std::invalid_argument("linucb: lambda must be > 0");
    LinUcbState s;
    s.gram = opts.lambda * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    s.response = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    s.alpha = opts.alpha;
    s.lambda = opts.lambda;
    return s;
  }

  Eigen::VectorXd estimate() const { return gram.ldlt().solve(response); }
};

inline Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

/// Upper-confidence action over the feature rows m(x, .); ties to the smallest index.
inline ActionId linucb_step(const LinUcbState& state, const FeatureMap& features, ContextId x) {
  const auto ldlt = state.gram.ldlt();
  const Eigen::VectorXd theta = ldlt.solve(state.response);
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (std::size_t a = 0; a < features.actions(); ++a) {
    const auto m = as_vector(features.at(x, ActionId{a}));
    const double width = std::sqrt(std::max(0.0, m.dot(ldlt.solve(Eigen::VectorXd(m)))));
    const double score = theta.dot(m) + state.alpha * width;
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return ActionId{best};
}

inline ActionId linucb_step(const LinUcbState& state, const ProblemSpec& spec, ContextId x) {
  if (!spec.features()) throw std::invalid_argument("linucb_step: problem has no feature map");
  return linucb_step(state, *spec.features(), x);
}

inline LinUcbState linucb_update(LinUcbState state, std::span<const double> feature, double reward) {
  if (static_cast<Eigen::Index>(feature.size()) != state.response.size())
    throw std::invalid_argument("linucb_update: feature dimension mismatch");
  const auto m = as_vector(feature);
  state.gram.noalias() += m * m.transpose();
  state.response.noalias() += reward * m;
  return state;
}

}  // namespace tslab

#pragma once

// Closed-form regret bounds and information-ratio caps for Thompson Sampling.
// Every function is a pure, deterministic function of its arguments.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tslab::bounds {

namespace detail {
inline void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": must be finite and >= 0");
}
inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": must be finite and > 0");
}
}  // namespace detail

/// Bounded variables on [0, L] are L^2/4 sub-Gaussian.
inline double subgaussian_proxy_bounded(double range) {
  detail::require_non_negative(range, "L");
  return range * range / 4.0;
}

/// sqrt(Gamma * T * I). Zero information gives a zero bound.
inline double thm1_bound(double gamma, double horizon, double information) {
  detail::require_non_negative(gamma, "gamma");
  detail::require_non_negative(information, "information");
  if (!(horizon >= 1.0)) throw std::invalid_argument("T: must be >= 1");
  return std::sqrt(gamma * horizon * information);
}

inline double lemma1_cap(double sigma2, std::size_t actions) {
  detail::require_non_negative(sigma2, "sigma2");
  return 2.0 * sigma2 * static_cast<double>(actions);
}

inline double lemma2_cap(double sigma2, std::size_t dim) {
  detail::require_non_negative(sigma2, "sigma2");
  return 2.0 * sigma2 * static_cast<double>(dim);
}

/// sqrt(L^2 |A| T H / 2), composed from the generic pieces so that the
/// identity with thm1_bound(lemma1_cap(L^2/4, A), T, H) is exact.
inline double cor1_bound(double range, std::size_t actions, double horizon, double entropy) {
  return thm1_bound(lemma1_cap(subgaussian_proxy_bounded(range), actions), horizon, entropy);
}

/// sqrt(L^2 d T log|O| / 2) for bounded rewards with linear means.
inline double cor3_bound(double range, std::size_t dim, double horizon, std::size_t params) {
  if (params == 0) throw std::invalid_argument("O: must be >= 1");
  return thm1_bound(lemma2_cap(subgaussian_proxy_bounded(range), dim), horizon,
                    std::log(static_cast<double>(params)));
}

struct CoveringTerm {
  double value = 0.0;  // nats
  bool clamped = false;
};

/// d log(3S / eps): log of the Euclidean covering-number bound (3S/eps)^d.
/// For eps > 3S the bound is vacuous; the term is clamped to 0 and flagged.
inline CoveringTerm covering_log_bound(double diameter, std::size_t dim, double eps) {
  detail::require_positive(eps, "eps");
  detail::require_non_negative(diameter, "S");
  if (dim == 0) return {0.0, false};
  if (eps > 3.0 * diameter) return {0.0, true};
  return {static_cast<double>(dim) * std::log(3.0 * diameter / eps), false};
}

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
inline double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double tol = 1e-12, int max_iter = 400) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct Thm2Result {
  double value = 0.0;  // sqrt(Gamma T inner)
  double inner = 0.0;  // min over eps of eps E[C] T + d log(3S/eps)
  double eps_star = 0.0;
  bool clamped = false;       // eps* hit the 3S boundary
  double golden_eps = 0.0;    // cross-check minimizer
  double golden_inner = 0.0;  // objective at golden_eps
};

inline double thm2_objective(double eps, double lipschitz, double horizon, double diameter, std::size_t dim) {
  return eps * lipschitz * horizon + covering_log_bound(diameter, dim, eps).value;
}

/// sqrt(Gamma T min_eps {eps E[C] T + log N(eps)}). The objective is convex in
/// eps with stationary point d / (E[C] T); the minimizer is clamped to (0, 3S].
inline Thm2Result thm2_bound(double gamma, double horizon, double lipschitz, double diameter, std::size_t dim) {
  detail::require_non_negative(gamma, "gamma");
  detail::require_positive(lipschitz, "EC");
  detail::require_positive(diameter, "S");
  if (!(horizon >= 1.0)) throw std::invalid_argument("T: must be >= 1");
  if (dim == 0) throw std::invalid_argument("d: must be >= 1");

  Thm2Result res;
  const double upper = 3.0 * diameter;
  res.eps_star = static_cast<double>(dim) / (lipschitz * horizon);
  if (res.eps_star > upper) {
    res.eps_star = upper;
    res.clamped = true;
  }
  res.inner = thm2_objective(res.eps_star, lipschitz, horizon, diameter, dim);

  // in log(eps) the objective stays convex: EC T e^u + d (log 3S - u)
  auto g = [&](double u) { return thm2_objective(std::exp(u), lipschitz, horizon, diameter, dim); };
  const double hi = std::log(upper);
  const double u = golden_section_minimize(g, hi - 60.0, hi);
  res.golden_eps = std::exp(u);
  res.golden_inner = g(u);

  res.value = std::sqrt(gamma * horizon * res.inner);
  return res;
}

struct Cor2Result {
  double value = 0.0;
  bool log_warning = false;  // 3 S E[C] T / (d beta) <= 1
};

/// sqrt((L^2 |A| T d / 2)(1 + log(3 S E[C] T / (d beta)))) with eps = d beta / (E[C] T);
/// E[C] is the Lipschitz constant of the location f_theta.
inline Cor2Result cor2_bound(double range, std::size_t actions, std::size_t dim, double diameter, double lipschitz,
                             double scale, double horizon) {
  detail::require_non_negative(range, "L");
  detail::require_positive(diameter, "S");
  detail::require_positive(lipschitz, "EC");
  detail::require_positive(scale, "beta");
  if (!(horizon >= 1.0)) throw std::invalid_argument("T: must be >= 1");
  if (dim == 0) throw std::invalid_argument("d: must be >= 1");
  const double d = static_cast<double>(dim);
  const double arg = 3.0 * diameter * lipschitz * horizon / (d * scale);
  const double factor = 1.0 + std::log(arg);
  Cor2Result res;
  res.log_warning = arg <= 1.0;
  res.value = std::sqrt(range * range * static_cast<double>(actions) * horizon * d / 2.0 * std::max(factor, 0.0));
  return res;
}

/// Inputs to the bound evaluation; unset optionals are derived from the problem.
struct BoundInputs {
  std::optional<double> gamma;
  std::optional<double> information;
  std::optional<double> lipschitz;  // Lipschitz constant of the log-likelihood, as used by thm2_bound
  std::optional<double> diameter;
};

struct BoundReport {
  std::map<std::string, double> values;
  std::optional<double> eps_star;
  std::vector<std::string> warnings;
};

}  // namespace tslab::bounds

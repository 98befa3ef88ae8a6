#pragma once

// Numeric kernels behind the information quantities: Bernoulli KL and
// mixture KL on a composite Gauss-Legendre rule.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace tslab {

class InfiniteKl : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline double bernoulli_kl(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("bernoulli_kl: probabilities must lie in [0,1]");
  auto term = [](double a, double b) -> double {
    if (a == 0.0) return 0.0;
    if (b == 0.0) throw InfiniteKl("bernoulli_kl: support of p not contained in support of q");
    return a * std::log(a / b);
  };
  return std::max(0.0, term(p, q) + term(1.0 - p, 1.0 - q));
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline constexpr unsigned kPanelOrder = 16;
inline constexpr std::size_t kPanels = 32;  // 32 x 16 = 512 nodes

/// Composite Gauss-Legendre rule on [lo, hi] with `panels` equal panels of
/// kPanelOrder nodes. Panels containing a breakpoint are split there, so
/// integrands with kinks at the breakpoints stay smooth on every panel.
inline QuadratureRule composite_gauss_legendre(double lo, double hi, std::size_t panels = kPanels,
                                               std::span<const double> breakpoints = {}) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi) || panels == 0)
    throw std::domain_error("composite_gauss_legendre: degenerate integration range");
  using Gauss = boost::math::quadrature::gauss<double, kPanelOrder>;
  const auto& abscissa = Gauss::abscissa();
  const auto& gweights = Gauss::weights();

  std::vector<double> edges;
  edges.reserve(panels + 1 + breakpoints.size());
  for (std::size_t i = 0; i <= panels; ++i)
    edges.push_back(i == panels ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(panels));
  for (double b : breakpoints)
    if (b > lo && b < hi) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  QuadratureRule rule;
  rule.nodes.reserve((edges.size() - 1) * kPanelOrder);
  rule.weights.reserve((edges.size() - 1) * kPanelOrder);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    const double mid = 0.5 * (edges[p + 1] + edges[p]);
    if (half <= 0.0) continue;
    // boost stores the non-negative abscissae only
    for (std::size_t k = 0; k < abscissa.size(); ++k) {
      const double x = abscissa[k];
      const double w = gweights[k] * half;
      if (x == 0.0) {
        rule.nodes.push_back(mid);
        rule.weights.push_back(w);
      } else {
        rule.nodes.push_back(mid - half * x);
        rule.weights.push_back(w);
        rule.nodes.push_back(mid + half * x);
        rule.weights.push_back(w);
      }
    }
  }
  return rule;
}

/// Sum_k mix[k] * KL(f_k || g) with g = Sum_k mix[k] f_k, evaluated on the
/// quadrature rule. `log_density` is row-major (components x nodes).
inline double mixture_kl_quadrature(const QuadratureRule& rule, std::span<const double> log_density,
                                    std::span<const double> mix) {
  const std::size_t n = rule.nodes.size();
  const std::size_t k = mix.size();
  if (log_density.size() != n * k) throw std::invalid_argument("mixture_kl_quadrature: shape mismatch");
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();

  std::vector<double> log_mix(n, neg_inf);
  for (std::size_t i = 0; i < n; ++i) {
    double top = neg_inf;
    for (std::size_t c = 0; c < k; ++c)
      if (mix[c] > 0.0) top = std::max(top, log_density[c * n + i]);
    if (top == neg_inf) continue;
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      if (mix[c] > 0.0) s += mix[c] * std::exp(log_density[c * n + i] - top);
    log_mix[i] = top + std::log(s);
  }

  // A component carrying most of the mass nearly equals the mixture; its log
  // ratio is taken as -log1p(sum_c' w_c' expm1(l_c' - l_c) / W) so the small
  // components' contribution is not lost to rounding.
  double mass = 0.0;
  std::size_t heavy = k;
  for (std::size_t c = 0; c < k; ++c) {
    if (mix[c] <= 0.0) continue;
    mass += mix[c];
    if (heavy == k || mix[c] > mix[heavy]) heavy = c;
  }
  if (heavy < k && mix[heavy] < 0.5 * mass) heavy = k;

  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (mix[c] <= 0.0) continue;
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lf = log_density[c * n + i];
      if (lf == neg_inf) continue;
      double log_ratio = lf - log_mix[i];
      if (c == heavy) {
        double dev = 0.0;
        for (std::size_t o = 0; o < k; ++o)
          if (o != c && mix[o] > 0.0) dev += mix[o] * std::expm1(log_density[o * n + i] - lf);
        log_ratio = -std::log1p(dev / mass);
      }
      kl += rule.weights[i] * std::exp(lf) * log_ratio;
    }
    total += mix[c] * kl;
  }
  return std::max(total, 0.0);
}

}  // namespace tslab

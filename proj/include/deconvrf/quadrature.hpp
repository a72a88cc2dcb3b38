#pragma once

#include <Eigen/Core>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace deconvrf {

/// Gauss-Legendre nodes and weights on [0, 1].
template <typename Scalar>
struct GaussLegendreRule
{
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  Eigen::Index size() const { return nodes.size(); }
};

namespace detail {

/// Newton iteration on P_n from the Tricomi initial guesses, carried out in
/// long double and mapped from [-1, 1] to [0, 1].
template <typename Scalar>
GaussLegendreRule<Scalar>
compute_gauss_legendre(int n)
{
  using Real = long double;
  GaussLegendreRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const Real pi = std::numbers::pi_v<Real>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Real x = std::cos(pi * (i + Real(0.75)) / (n + Real(0.5)));
    Real dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Real p0 = 1;
      Real p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1)
        p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      const Real dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-19L)
        break;
    }
    // recompute derivative at the converged root
    Real p0 = 1;
    Real p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? Real(1) : n * (x * p1 - p0) / (x * x - 1);
    const Real w = 2 / ((1 - x * x) * dp * dp);
    // x_i descending in [-1, 1]; store ascending on [0, 1]
    rule.nodes(n - 1 - i) = static_cast<Scalar>((1 + x) / 2);
    rule.weights(n - 1 - i) = static_cast<Scalar>(w / 2);
    rule.nodes(i) = static_cast<Scalar>((1 - x) / 2);
    rule.weights(i) = static_cast<Scalar>(w / 2);
  }
  return rule;
}

} // namespace detail

/// Cached rule with n nodes on [0, 1]. Thread safe; the returned reference
/// stays valid for the program lifetime.
template <typename Scalar = double>
const GaussLegendreRule<Scalar>&
gauss_legendre(int n)
{
  if (n < 1)
    throw std::invalid_argument("gauss-legendre rule needs at least one node");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendreRule<Scalar>>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot)
    slot = std::make_unique<GaussLegendreRule<Scalar>>(detail::compute_gauss_legendre<Scalar>(n));
  return *slot;
}

/// Integral of f over [a, b] with a fixed n-node rule.
template <typename Scalar, typename F>
Scalar
integrate(F&& f, Scalar a, Scalar b, int n)
{
  const auto& rule = gauss_legendre<Scalar>(n);
  const Scalar h = b - a;
  Scalar s = 0;
  for (Eigen::Index k = 0; k < rule.size(); ++k)
    s += rule.weights(k) * f(a + h * rule.nodes(k));
  return s * h;
}

/// Composite rule over consecutive panels [edges[k], edges[k+1]].
template <typename Scalar, typename F, typename Edges>
Scalar
integrate_panels(F&& f, const Edges& edges, int n_per_panel)
{
  Scalar s = 0;
  for (std::size_t k = 0; k + 1 < std::size(edges); ++k)
    s += integrate<Scalar>(f, static_cast<Scalar>(edges[k]), static_cast<Scalar>(edges[k + 1]), n_per_panel);
  return s;
}

} // namespace deconvrf

#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "errors.hpp"

namespace glmrot {

/** @brief Nodes and weights of a one-dimensional rule. */
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

namespace detail {

// Golub-Welsch nodes; weights from the Christoffel function of the
// orthonormal family, which keeps tiny tail weights accurate
template <class Recurrence>
QuadratureRule golub_welsch(int n, const Eigen::VectorXd& offdiag, Recurrence christoffel) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  Eigen::VectorXd sub = offdiag;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()[i];
    if (std::abs(x) < 1e-15) x = 0.0;
    r.nodes[i] = x;
    r.weights[i] = christoffel(x);
  }
  // enforce exact symmetry
  for (int i = 0; i < n / 2; ++i) {
    double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
    double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = w;
  }
  return r;
}

inline QuadratureRule make_hermite(int n) {
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(double(k));
  auto christoffel = [n](double x) {
    double pm = 0.0, p = 1.0, s = 1.0;
    for (int k = 0; k < n - 1; ++k) {
      double pn = (x * p - std::sqrt(double(k)) * pm) / std::sqrt(double(k + 1));
      pm = p;
      p = pn;
      s += p * p;
    }
    return 1.0 / s;
  };
  return golub_welsch(n, off, christoffel);
}

inline QuadratureRule make_legendre(int n) {
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  auto christoffel = [n](double x) {
    double pm = 0.0, p = 1.0, s = 0.5;
    for (int k = 0; k < n - 1; ++k) {
      double pn = ((2.0 * k + 1.0) * x * p - k * pm) / (k + 1.0);
      pm = p;
      p = pn;
      s += (2.0 * (k + 1) + 1.0) / 2.0 * p * p;
    }
    return 1.0 / s;
  };
  return golub_welsch(n, off, christoffel);
}

template <class Make>
const QuadratureRule& cached_rule(int n, Make make, std::map<int, std::unique_ptr<QuadratureRule>>& cache,
                                  std::mutex& mu) {
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<QuadratureRule>(make(n))).first;
  return *it->second;
}

}  // namespace detail

/** @brief Gauss-Hermite rule for E[f(xi)], xi ~ N(0,1); weights sum to one. */
inline const QuadratureRule& gauss_hermite(int n) {
  require(n >= 1, "quadrature order must be >= 1");
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mu;
  return detail::cached_rule(n, detail::make_hermite, cache, mu);
}

/** @brief Gauss-Legendre rule on [-1, 1]; weights sum to two. */
inline const QuadratureRule& gauss_legendre(int n) {
  require(n >= 1, "quadrature order must be >= 1");
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  static std::mutex mu;
  return detail::cached_rule(n, detail::make_legendre, cache, mu);
}

/** @brief E[fn(xi)] for xi ~ N(0,1) by Gauss-Hermite. */
template <class F>
double gauss_hermite_expectation(F&& fn, int order) {
  const auto& r = gauss_hermite(order);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) acc += r.weights[i] * fn(r.nodes[i]);
  return acc;
}

/**
 * @brief E[fn(W)] for W ~ N(0, sd^2) with fn smooth between the given breakpoints.
 *
 * Piecewise Gauss-Legendre on [-span*sd, span*sd], cut at every breakpoint and
 * into panels no wider than sd. `fn` may return any type supporting `+=` and
 * scalar multiplication.
 */
template <class F>
auto gaussian_piecewise_expectation(F&& fn, double sd, std::vector<double> breaks = {}, int nodes = 12,
                                    double span = 10.0) {
  using R = decltype(fn(0.0));
  if (!(sd > 0.0)) return fn(0.0);
  const auto& gl = gauss_legendre(nodes);
  double lo = -span * sd, hi = span * sd;
  std::vector<double> cuts{lo, hi};
  for (double b : breaks)
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  R acc = fn(0.0) * 0.0;
  const double norm = 1.0 / (std::sqrt(2.0 * M_PI) * sd);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double a = cuts[k], b = cuts[k + 1];
    if (b - a <= 0.0) continue;
    int panels = std::max(1, int(std::ceil((b - a) / sd)));
    double h = (b - a) / panels;
    for (int q = 0; q < panels; ++q) {
      double c = a + (q + 0.5) * h, half = 0.5 * h;
      for (std::size_t i = 0; i < gl.size(); ++i) {
        double w = c + half * gl.nodes[i];
        double dens = norm * std::exp(-0.5 * w * w / (sd * sd));
        acc += fn(w) * (gl.weights[i] * half * dens);
      }
    }
  }
  return acc;
}

}  // namespace glmrot

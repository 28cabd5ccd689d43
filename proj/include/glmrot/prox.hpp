#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace glmrot {

enum class FunctionKind { Square, Logistic, Hinge, ElasticNet, PureL1, PureL2 };

/**
 * @brief Separable convex function of one coordinate.
 *
 * Losses read `label`; penalties ignore it. Every kind carries an extra
 * ridge term l2_weight * x^2 / 2, so a regularised loss is one spec.
 */
struct ScalarFunctionSpec {
  FunctionKind kind = FunctionKind::Square;
  double l1_weight = 0.0;
  double l2_weight = 0.0;
  double label = 0.0;

  ScalarFunctionSpec with_label(double y) const {
    ScalarFunctionSpec s = *this;
    s.label = y;
    return s;
  }
  bool is_loss() const {
    return kind == FunctionKind::Square || kind == FunctionKind::Logistic ||
           kind == FunctionKind::Hinge;
  }
};

inline ScalarFunctionSpec square_loss(double l2 = 0.0) { return {FunctionKind::Square, 0.0, l2, 0.0}; }
inline ScalarFunctionSpec logistic_loss(double l2 = 0.0) { return {FunctionKind::Logistic, 0.0, l2, 0.0}; }
inline ScalarFunctionSpec hinge_loss(double l2 = 0.0) { return {FunctionKind::Hinge, 0.0, l2, 0.0}; }
inline ScalarFunctionSpec elastic_net(double l1, double l2) { return {FunctionKind::ElasticNet, l1, l2, 0.0}; }
inline ScalarFunctionSpec pure_l1(double l1) { return {FunctionKind::PureL1, l1, 0.0, 0.0}; }
inline ScalarFunctionSpec pure_l2(double l2) { return {FunctionKind::PureL2, 0.0, l2, 0.0}; }

inline std::string to_string(FunctionKind k) {
  switch (k) {
    case FunctionKind::Square: return "square";
    case FunctionKind::Logistic: return "logistic";
    case FunctionKind::Hinge: return "hinge";
    case FunctionKind::ElasticNet: return "elastic_net";
    case FunctionKind::PureL1: return "pure_l1";
    case FunctionKind::PureL2: return "pure_l2";
  }
  return "?";
}

inline FunctionKind function_kind_from_string(const std::string& s) {
  if (s == "square") return FunctionKind::Square;
  if (s == "logistic") return FunctionKind::Logistic;
  if (s == "hinge") return FunctionKind::Hinge;
  if (s == "elastic_net") return FunctionKind::ElasticNet;
  if (s == "pure_l1" || s == "l1") return FunctionKind::PureL1;
  if (s == "pure_l2" || s == "l2" || s == "ridge") return FunctionKind::PureL2;
  throw InvalidInput("unknown function kind '" + s + "'");
}

namespace detail {

inline double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }
inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

inline void check_args(double p, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw InvalidInput("prox scale gamma must be positive and finite, got " + std::to_string(gamma));
  if (!std::isfinite(p)) throw InvalidInput("prox argument is not finite");
}

// root of x - p - gamma*y*sigmoid(-y*x) = 0, bracketed by p and p + gamma*y;
// Newton steps, bisection whenever Newton leaves the bracket or stalls
inline double logistic_prox_base(double y, double p, double gamma) {
  if (y == 0.0) return p;
  double lo = std::min(p, p + gamma * y), hi = std::max(p, p + gamma * y);
  auto h = [&](double x) { return x - p - gamma * y * sigmoid(-y * x); };
  if (h(lo) >= 0.0) return lo;
  if (h(hi) <= 0.0) return hi;
  double x = std::clamp(p + gamma * y * sigmoid(-y * p), lo, hi);
  double dx_old = hi - lo, dx = dx_old;
  for (int it = 0; it < 300; ++it) {
    double hx = h(x);
    if (hx == 0.0) return x;
    if (hx > 0) hi = x; else lo = x;
    double s = sigmoid(y * x);
    double dh = 1.0 + gamma * y * y * s * (1.0 - s);
    double xn = x - hx / dh;
    if (!(xn > lo && xn < hi) || std::abs(2.0 * hx) > std::abs(dx_old * dh)) {
      dx_old = dx;
      xn = 0.5 * (lo + hi);
    } else {
      dx_old = dx;
    }
    dx = xn - x;
    if (std::abs(dx) <= 1e-12 * (1.0 + std::abs(xn)) || hi - lo <= 1e-12 * (1.0 + std::abs(xn))) return xn;
    x = xn;
  }
  throw NumericalError("logistic prox root-finding did not converge");
}

inline double base_prox(const ScalarFunctionSpec& s, double p, double g) {
  switch (s.kind) {
    case FunctionKind::Square: return (p + g * s.label) / (1.0 + g);
    case FunctionKind::Logistic: return logistic_prox_base(s.label, p, g);
    case FunctionKind::Hinge: {
      double y = s.label;
      if (y == 0.0) return p;
      double u = 1.0 - y * p;
      if (u >= g * y * y) return p + g * y;
      if (u <= 0.0) return p;
      return 1.0 / y;
    }
    case FunctionKind::ElasticNet:
    case FunctionKind::PureL1: {
      double t = g * s.l1_weight;
      if (p > t) return p - t;
      if (p < -t) return p + t;
      return 0.0;
    }
    case FunctionKind::PureL2: return p;
  }
  return p;
}

inline double base_prox_derivative(const ScalarFunctionSpec& s, double p, double g) {
  switch (s.kind) {
    case FunctionKind::Square: return 1.0 / (1.0 + g);
    case FunctionKind::Logistic: {
      double x = logistic_prox_base(s.label, p, g);
      double sg = sigmoid(s.label * x);
      return 1.0 / (1.0 + g * s.label * s.label * sg * (1.0 - sg));
    }
    case FunctionKind::Hinge: {
      double y = s.label;
      if (y == 0.0) return 1.0;
      double u = 1.0 - y * p;
      return (u > 0.0 && u < g * y * y) ? 0.0 : 1.0;
    }
    case FunctionKind::ElasticNet:
    case FunctionKind::PureL1: {
      // right limit at the kinks
      double t = g * s.l1_weight;
      return (p >= t || p < -t) ? 1.0 : 0.0;
    }
    case FunctionKind::PureL2: return 1.0;
  }
  return 1.0;
}

inline double base_value(const ScalarFunctionSpec& s, double x) {
  switch (s.kind) {
    case FunctionKind::Square: return 0.5 * (x - s.label) * (x - s.label);
    case FunctionKind::Logistic: return softplus(-s.label * x);
    case FunctionKind::Hinge: return std::max(0.0, 1.0 - s.label * x);
    case FunctionKind::ElasticNet:
    case FunctionKind::PureL1: return s.l1_weight * std::abs(x);
    case FunctionKind::PureL2: return 0.0;
  }
  return 0.0;
}

}  // namespace detail

/** @brief f(x), including the ridge term. */
inline double value(const ScalarFunctionSpec& s, double x) {
  return detail::base_value(s, x) + 0.5 * s.l2_weight * x * x;
}

/** @brief argmin_x f(x) + (x - p)^2 / (2 gamma). */
inline double prox(const ScalarFunctionSpec& s, double p, double gamma) {
  detail::check_args(p, gamma);
  double c = 1.0 + gamma * s.l2_weight;
  return detail::base_prox(s, p / c, gamma / c);
}

/** @brief d prox / dp; right limit at kinks, outer branch value at hinge breakpoints. */
inline double prox_derivative(const ScalarFunctionSpec& s, double p, double gamma) {
  detail::check_args(p, gamma);
  double c = 1.0 + gamma * s.l2_weight;
  return detail::base_prox_derivative(s, p / c, gamma / c) / c;
}

/** @brief min_x f(x) + (x - p)^2 / (2 gamma). */
inline double moreau_envelope(const ScalarFunctionSpec& s, double p, double gamma) {
  double x = prox(s, p, gamma);
  return value(s, x) + (x - p) * (x - p) / (2.0 * gamma);
}

/** @brief Modulus of strong convexity (sigma) of the spec. */
inline double strong_convexity(const ScalarFunctionSpec& s) {
  double base = s.kind == FunctionKind::Square ? 1.0 : 0.0;
  return base + s.l2_weight;
}

/** @brief Smoothness constant (beta); infinite for nonsmooth kinds. */
inline double smoothness(const ScalarFunctionSpec& s) {
  const double inf = std::numeric_limits<double>::infinity();
  switch (s.kind) {
    case FunctionKind::Square: return 1.0 + s.l2_weight;
    case FunctionKind::Logistic: return 0.25 * (s.label == 0.0 ? 1.0 : s.label * s.label) + s.l2_weight;
    case FunctionKind::Hinge: return inf;
    case FunctionKind::ElasticNet:
    case FunctionKind::PureL1: return s.l1_weight > 0.0 ? inf : s.l2_weight;
    case FunctionKind::PureL2: return s.l2_weight;
  }
  return inf;
}

// vector forms; labels may be empty for penalties

inline Eigen::VectorXd prox(const ScalarFunctionSpec& s, const Eigen::VectorXd& p, double gamma,
                            const Eigen::VectorXd& labels = Eigen::VectorXd()) {
  Eigen::VectorXd out(p.size());
  bool lab = labels.size() == p.size();
  for (Eigen::Index i = 0; i < p.size(); ++i)
    out[i] = prox(lab ? s.with_label(labels[i]) : s, p[i], gamma);
  return out;
}

inline Eigen::VectorXd prox_derivative(const ScalarFunctionSpec& s, const Eigen::VectorXd& p, double gamma,
                                       const Eigen::VectorXd& labels = Eigen::VectorXd()) {
  Eigen::VectorXd out(p.size());
  bool lab = labels.size() == p.size();
  for (Eigen::Index i = 0; i < p.size(); ++i)
    out[i] = prox_derivative(lab ? s.with_label(labels[i]) : s, p[i], gamma);
  return out;
}

inline double total_value(const ScalarFunctionSpec& s, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& labels = Eigen::VectorXd()) {
  bool lab = labels.size() == x.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) acc += value(lab ? s.with_label(labels[i]) : s, x[i]);
  return acc;
}

}  // namespace glmrot

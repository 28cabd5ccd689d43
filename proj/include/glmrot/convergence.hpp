#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ensembles.hpp"
#include "errors.hpp"
#include "mlvamp.hpp"

namespace glmrot {

/** @brief The four Q-hat scalars of the two-layer iteration at a fixed point. */
struct QHats {
  double q1x = 1, q2x = 1, q1z = 1, q2z = 1;
};

struct LipschitzConstants {
  double omega1 = 0, omega2 = 0;
  bool fallback1 = false, fallback2 = false;
};

/**
 * @brief Exact Lipschitz constant of (Q1/Q2)(prox/(chi Q1) - Id) for a separable
 * function with curvature in [sigma, beta], chi = 1/(Q1 + Q2).
 */
inline double lipschitz_max_form(double q1, double q2, double sigma, double beta) {
  double a = (q2 - sigma) / (q1 + sigma);
  double b = std::isinf(beta) ? 1.0 : (beta - q2) / (q1 + beta);
  return (q1 / q2) * std::max(std::abs(a), std::abs(b));
}

/**
 * @brief omega = (Q1/Q2) sqrt(1 + (Q2^2 - Q1^2) / (Q1 + sigma)^2).
 *
 * This closed form bounds the max form only when Q2 >= Q1; otherwise (and in
 * particular for a negative radicand) the max form with beta = inf is returned
 * and the fallback flag is set.
 */
inline double lipschitz_closed_form(double q1, double q2, double sigma, bool* fallback = nullptr) {
  require(q1 > 0.0 && q2 > 0.0, "Q-hat values must be positive");
  require(sigma >= 0.0, "strong convexity must be non-negative");
  double rad = 1.0 + (q2 * q2 - q1 * q1) / ((q1 + sigma) * (q1 + sigma));
  bool fb = rad < 0.0 || q2 < q1;
  if (fallback) *fallback = fb;
  if (fb) return lipschitz_max_form(q1, q2, sigma, std::numeric_limits<double>::infinity());
  return (q1 / q2) * std::sqrt(rad);
}

/** @brief omega_1 for the penalty side and omega_2 for the loss side. */
inline LipschitzConstants lipschitz_constants(const QHats& q, double sigma_f, double sigma_g) {
  LipschitzConstants r;
  r.omega1 = lipschitz_closed_form(q.q1x, q.q2x, sigma_f, &r.fallback1);
  r.omega2 = lipschitz_closed_form(q.q1z, q.q2z, sigma_g, &r.fallback2);
  return r;
}

/** @brief Exact constants from the curvature range of the penalty and of the loss. */
inline LipschitzConstants certificate_constants(const QHats& q, const ScalarFunctionSpec& penalty,
                                                const ScalarFunctionSpec& loss) {
  LipschitzConstants r;
  r.omega1 = lipschitz_max_form(q.q1x, q.q2x, strong_convexity(penalty), smoothness(penalty));
  r.omega2 = lipschitz_max_form(q.q1z, q.q2z, strong_convexity(loss), smoothness(loss));
  return r;
}

/** @brief Per-singular-value coefficients of W1..W4. */
struct ModeCoefficients {
  double w1 = 0, w2 = 0, w3 = 0, w4 = 0;
};

/**
 * @brief The linear recast h^(t+1) = B u^(t) diagonalised in the SVD basis.
 *
 * Paired modes couple one right and one left singular vector; unpaired modes
 * live in the kernel of F (N > M) or of F^T (M > N).
 */
struct ModeSystem {
  QHats q;
  double chi2x = 0, chi2z = 0;
  double omega1 = 0, omega2 = 0;
  std::vector<double> lambdas;  // paired modes
  bool has_right_kernel = false, has_left_kernel = false;

  ModeCoefficients paired(double lambda) const {
    double D = q.q2x + q.q2z * lambda, s = std::sqrt(std::max(lambda, 0.0));
    ModeCoefficients c;
    c.w1 = (q.q2x / q.q1x) * (1.0 / (chi2x * D) - 1.0);
    c.w2 = (q.q2z / (chi2x * q.q1x)) * s / D;
    c.w3 = (q.q2z / q.q1z) * (lambda / (chi2z * D) - 1.0);
    c.w4 = (q.q2x / (q.q1z * chi2z)) * s / D;
    return c;
  }
  double kernel_w1() const { return (q.q2x / q.q1x) * (1.0 / (chi2x * q.q2x) - 1.0); }
  double kernel_w3() const { return -q.q2z / q.q1z; }
};

namespace detail {

inline void fill_chis(ModeSystem& m) {
  require(m.q.q1x > 0 && m.q.q2x > 0 && m.q.q1z > 0 && m.q.q2z > 0, "Q-hat values must be positive");
  m.chi2x = 1.0 / (m.q.q1x + m.q.q2x);
  m.chi2z = 1.0 / (m.q.q1z + m.q.q2z);
}

}  // namespace detail

/** @brief Mode system over the singular values of a sampled design. */
inline ModeSystem mode_system(const DesignMatrix& d, const QHats& q, const LipschitzConstants& w) {
  ModeSystem m;
  m.q = q;
  m.omega1 = w.omega1;
  m.omega2 = w.omega2;
  detail::fill_chis(m);
  for (Eigen::Index i = 0; i < d.s.size(); ++i) m.lambdas.push_back(d.s[i] * d.s[i]);
  m.has_right_kernel = d.N() > d.s.size();
  m.has_left_kernel = d.M() > d.s.size();
  return m;
}

/** @brief Mode system over the support of a limiting spectrum, sampled on a grid. */
inline ModeSystem mode_system(const SpectralDensity& sd, const QHats& q, const LipschitzConstants& w,
                              int grid = 400) {
  ModeSystem m;
  m.q = q;
  m.omega1 = w.omega1;
  m.omega2 = w.omega2;
  detail::fill_chis(m);
  for (std::size_t i = 0; i < sd.atom_values.size(); ++i)
    if (sd.atom_weights[i] > 0 && sd.atom_values[i] > 0) m.lambdas.push_back(sd.atom_values[i]);
  if (sd.continuous_mass > 0) {
    for (int i = 0; i <= grid; ++i)
      m.lambdas.push_back(sd.support_lo + (sd.support_hi - sd.support_lo) * double(i) / grid);
    m.lambdas.insert(m.lambdas.end(), sd.nodes.begin(), sd.nodes.end());
  }
  m.has_right_kernel = sd.alpha < 1.0;
  m.has_left_kernel = sd.alpha > 1.0;
  return m;
}

struct OperatorNorms {
  double w1 = 0, w2 = 0, w3 = 0, w4 = 0;
};

/** @brief Exact spectral norms of W1..W4 over the modes of the system. */
inline OperatorNorms operator_norms(const ModeSystem& m) {
  OperatorNorms n;
  for (double l : m.lambdas) {
    ModeCoefficients c = m.paired(l);
    n.w1 = std::max(n.w1, std::abs(c.w1));
    n.w2 = std::max(n.w2, std::abs(c.w2));
    n.w3 = std::max(n.w3, std::abs(c.w3));
    n.w4 = std::max(n.w4, std::abs(c.w4));
  }
  if (m.has_right_kernel) n.w1 = std::max(n.w1, std::abs(m.kernel_w1()));
  if (m.has_left_kernel) n.w3 = std::max(n.w3, std::abs(m.kernel_w3()));
  return n;
}

/**
 * @brief Closed-form norm expressions in terms of the extreme eigenvalues.
 *
 * Exact for W1 and W3; for W2 and W4 they bound the true norm from above.
 * `lmin`, `lmax` refer to F^T F for W1, W2, W4 and `lmin_left`, `lmax_left` to F F^T.
 */
inline OperatorNorms operator_norm_bounds(const QHats& q, double lmin, double lmax, double lmin_left,
                                          double lmax_left) {
  double chi2x = 1.0 / (q.q1x + q.q2x), chi2z = 1.0 / (q.q1z + q.q2z);
  auto w1 = [&](double l) { return std::abs(q.q1x - q.q2z * l) / (q.q2x + q.q2z * l); };
  auto w3 = [&](double l) { return std::abs(q.q2x - q.q1z * l) / (q.q2x + q.q2z * l); };
  OperatorNorms n;
  n.w1 = (q.q2x / q.q1x) * std::max(w1(lmin), w1(lmax));
  n.w2 = (q.q2z / (chi2x * q.q1x)) * std::sqrt(lmax) / (q.q2x + q.q2z * lmin);
  n.w3 = (q.q2z / q.q1z) * std::max(w3(lmin_left), w3(lmax_left));
  n.w4 = (q.q2x / (chi2z * q.q1z)) * std::sqrt(lmax) / (q.q2x + q.q2z * lmin);
  return n;
}

/** @brief Dense W1..W4 for a sampled design, for cross-checks. */
struct DenseOperators {
  Eigen::MatrixXd W1, W2, W3, W4;
};

inline DenseOperators dense_operators(const DesignMatrix& d, const QHats& q) {
  const Eigen::Index N = d.N(), M = d.M();
  double chi2x = 1.0 / (q.q1x + q.q2x), chi2z = 1.0 / (q.q1z + q.q2z);
  Eigen::VectorXd inv = (1.0 / (q.q2x + q.q2z * d.lambda_right().array())).matrix();
  Eigen::MatrixXd Ainv = d.V * inv.asDiagonal() * d.V.transpose();
  DenseOperators o;
  o.W1 = (q.q2x / q.q1x) * (Ainv / chi2x - Eigen::MatrixXd::Identity(N, N));
  o.W2 = (q.q2z / (chi2x * q.q1x)) * Ainv * d.F.transpose();
  o.W3 = (q.q2z / q.q1z) * (d.F * Ainv * d.F.transpose() / chi2z - Eigen::MatrixXd::Identity(M, M));
  o.W4 = (q.q2x / (q.q1z * chi2z)) * d.F * Ainv;
  return o;
}

/**
 * @brief Dense matrix of the dissipation inequality with P = I.
 *
 * Variables ordered (h2z, h1x, u2, u1). The certificate holds iff this matrix
 * is negative semidefinite.
 */
inline Eigen::MatrixXd dense_lmi(const DesignMatrix& d, const QHats& q, double omega1, double omega2, double tau,
                                 double beta1, double beta2) {
  const Eigen::Index N = d.N(), M = d.M(), n = 2 * (M + N);
  DenseOperators o = dense_operators(d, q);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(M + N, M + N);  // acts on (u2, u1)
  B.topLeftCorner(M, M).setIdentity();
  B.bottomLeftCorner(N, M) = o.W2;
  B.bottomRightCorner(N, N) = o.W1;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, n);  // v = W3 h2z + W4 u1
  G.leftCols(M) = o.W3;
  G.rightCols(N) = o.W4;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  L.topLeftCorner(M + N, M + N).diagonal().setConstant(-tau * tau);
  L.bottomRightCorner(M + N, M + N) += B.transpose() * B;
  L.block(M, M, N, N).diagonal().array() += beta1 * omega1 * omega1;
  L.bottomRightCorner(N, N).diagonal().array() -= beta1;
  L += beta2 * omega2 * omega2 * G.transpose() * G;
  L.block(M + N, M + N, M, M).diagonal().array() -= beta2;
  return L;
}

struct Certificate {
  bool feasible = false;
  double tau = NAN;
  double beta1 = NAN, beta2 = NAN;
};

namespace detail {

// worst violation over all modes of the per-mode blocks; <= 0 means feasible
inline double mode_violation(const ModeSystem& m, double tau, double beta1, double beta2, double margin) {
  const double t2 = tau * tau, w1s = m.omega1 * m.omega1, w2s = m.omega2 * m.omega2;
  double worst = -INFINITY;
  double aa = -t2 + beta1 * w1s;
  worst = std::max(worst, aa + margin);
  for (double l : m.lambdas) {
    ModeCoefficients c = m.paired(l);
    double cc = -t2 + beta2 * w2s * c.w3 * c.w3;
    double dd = 1.0 + c.w2 * c.w2 - beta2;
    double bb = c.w1 * c.w1 - beta1 + beta2 * w2s * c.w4 * c.w4;
    double cb = beta2 * w2s * c.w3 * c.w4, db = c.w1 * c.w2;
    double v = std::max(cc, dd) + margin;
    if (v <= 0.0) v = bb - cb * cb / cc - db * db / dd + margin;
    worst = std::max(worst, v);
    if (worst > 0.0) return worst;
  }
  if (m.has_right_kernel) {
    double w1 = m.kernel_w1();
    worst = std::max(worst, w1 * w1 - beta1 + margin);
  }
  if (m.has_left_kernel) {
    double w3 = m.kernel_w3();
    worst = std::max({worst, -t2 + beta2 * w2s * w3 * w3 + margin, 1.0 - beta2 + margin});
  }
  return worst;
}

inline bool feasible_at(const ModeSystem& m, double tau, double margin, double& b1, double& b2) {
  const double t2 = tau * tau;
  // beta1 only enters through the h1x block, so its best value is the largest allowed
  b1 = m.omega1 > 0 ? (t2 - 2.0 * margin) / (m.omega1 * m.omega1) : 1e12;
  if (!(b1 > 0.0)) return false;
  const int G = 241;
  double best = INFINITY, best_b = NAN;
  for (int i = 0; i < G; ++i) {
    double b = std::pow(10.0, -3.0 + 9.0 * i / (G - 1));
    double v = mode_violation(m, tau, b1, b, margin);
    if (v < best) {
      best = v;
      best_b = b;
    }
    if (v <= 0.0) {
      b2 = b;
      return true;
    }
  }
  // golden-section refinement around the best grid point in log space
  double lo = std::log10(best_b) - 9.0 / (G - 1), hi = std::log10(best_b) + 9.0 / (G - 1);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int k = 0; k < 60; ++k) {
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double v1 = mode_violation(m, tau, b1, std::pow(10.0, x1), margin);
    double v2 = mode_violation(m, tau, b1, std::pow(10.0, x2), margin);
    if (v1 <= 0.0) {
      b2 = std::pow(10.0, x1);
      return true;
    }
    if (v2 <= 0.0) {
      b2 = std::pow(10.0, x2);
      return true;
    }
    if (v1 < v2) hi = x2; else lo = x1;
  }
  return false;
}

}  // namespace detail

/**
 * @brief Smallest tau in [0, 1) for which the dissipation inequality with P = I
 * admits multipliers, by bisection to `tol`.
 */
inline Certificate contraction_certificate(const ModeSystem& m, double tol = 1e-4, double margin = 1e-10) {
  require(m.omega1 >= 0.0 && m.omega2 >= 0.0, "Lipschitz constants must be non-negative");
  Certificate c;
  double b1 = 0, b2 = 0;
  double hi = 1.0 - tol;
  if (!detail::feasible_at(m, hi, margin, b1, b2)) return c;
  c.feasible = true;
  c.tau = hi;
  c.beta1 = b1;
  c.beta2 = b2;
  double lo = 0.0;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (detail::feasible_at(m, mid, margin, b1, b2)) {
      hi = mid;
      c.tau = mid;
      c.beta1 = b1;
      c.beta2 = b2;
    } else {
      lo = mid;
    }
  }
  return c;
}

/** @brief Per-mode verdict for given multipliers (true iff every block is NSD with margin). */
inline bool certificate_holds(const ModeSystem& m, double tau, double beta1, double beta2, double margin = 0.0) {
  return detail::mode_violation(m, tau, beta1, beta2, margin) <= 0.0;
}

/**
 * @brief Linear-decay rate of successive distances, exp of the least-squares
 * slope of log d_t over the given window.
 */
inline double fit_empirical_rate(const std::vector<double>& dist) {
  std::vector<double> x, y;
  for (std::size_t t = 0; t < dist.size(); ++t)
    if (dist[t] > 0.0 && std::isfinite(dist[t])) {
      x.push_back(double(t));
      y.push_back(std::log(dist[t]));
    }
  if (x.size() < 5) throw InvalidInput("rate fit needs at least five positive trace points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= x.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return std::exp(sxy / sxx);
}

/**
 * @brief Distances from the linear-decay part of a solver trace: skips the
 * transient head and stops before round-off dominates.
 */
inline std::vector<double> linear_regime(const std::vector<MlvampIterate>& trace, double floor_rel = 1e-11,
                                         std::size_t skip = 5) {
  std::vector<double> d;
  if (trace.empty()) return d;
  double d0 = 0;
  for (const auto& it : trace) d0 = std::max(d0, it.dist);
  for (std::size_t t = std::min(skip, trace.size() / 4); t < trace.size(); ++t) {
    if (trace[t].dist < floor_rel * d0) break;
    d.push_back(trace[t].dist);
  }
  return d;
}

/** @brief Curvature bounds of the two separable functions and the spectrum. */
struct SandwichBounds {
  double sigma_f = 0, beta_f = INFINITY, sigma_g = 0, beta_g = INFINITY;
  double lmin = 0, lmax = 0, lmin_left = 0, lmax_left = 0;
};

/**
 * @brief Largest relative violation of the Q-hat sandwich inequalities by one
 * undamped sweep; <= 0 means all hold.
 */
inline double sandwich_violation(const MlvampIterate& it, const SandwichBounds& b, double rel = 1e-9) {
  auto below = [&](double lo, double v) { return (lo - v) / std::max(1.0, std::abs(lo)) - rel; };
  auto above = [&](double v, double hi) { return std::isinf(hi) ? -1.0 : (v - hi) / std::max(1.0, std::abs(hi)) - rel; };
  double r = -INFINITY;
  r = std::max({r, below(b.sigma_f, it.q2x), above(it.q2x, b.beta_f)});
  r = std::max({r, below(b.sigma_g, it.q2z), above(it.q2z, b.beta_g)});
  r = std::max({r, below(b.lmin * it.q2z, it.q1x), above(it.q1x, b.lmax * it.q2z)});
  double up = b.lmin_left > 0 ? it.q2x / b.lmin_left : INFINITY;
  r = std::max({r, below(it.q2x / b.lmax_left, it.q1z), above(it.q1z, up)});
  return r;
}

/** @brief Certificate for one instance, evaluated at the scalars a run ended on. */
inline Certificate instance_certificate(const GlmProblem& prob, const MlvampResult& r, double tol = 1e-4) {
  require(r.converged, "instance certificate needs a converged run");
  QHats q{r.q1x, r.q2x, r.q1z, r.q2z};
  return contraction_certificate(mode_system(*prob.design, q, certificate_constants(q, prob.penalty, prob.loss)), tol);
}

}  // namespace glmrot

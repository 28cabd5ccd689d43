#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ensembles.hpp"
#include "errors.hpp"
#include "prox.hpp"

namespace glmrot {

/**
 * @brief min_x sum_mu loss(y_mu, (F x)_mu) + sum_i penalty(x_i).
 *
 * `x0` is optional; when present it feeds the per-iteration overlaps.
 */
struct GlmProblem {
  const DesignMatrix* design = nullptr;
  Eigen::VectorXd y;
  ScalarFunctionSpec loss;
  ScalarFunctionSpec penalty;
  Eigen::VectorXd x0;

  const Eigen::MatrixXd& F() const { return design->F; }
  void validate() const {
    if (!design) throw InvalidInput("problem has no design matrix");
    if (y.size() != design->M()) throw InvalidInput("label vector length differs from M");
    if (!loss.is_loss()) throw InvalidInput("loss spec must be square, logistic or hinge");
    if (penalty.is_loss()) throw InvalidInput("penalty spec must be elastic_net, pure_l1 or pure_l2");
    if (x0.size() != 0 && x0.size() != design->N()) throw InvalidInput("x0 length differs from N");
  }
  double cost(const Eigen::VectorXd& x) const {
    Eigen::VectorXd z = F() * x;
    return total_value(loss, z, y) + total_value(penalty, x);
  }
};

enum class InitKind { Zeros, Gaussian };

struct MlvampConfig {
  int max_iter = 500;
  double tol = 1e-8;
  double damping = 0.0;
  InitKind init = InitKind::Gaussian;
  double init_scale = 1.0;
  std::uint64_t seed = 0;
  double q1x_init = 1.0;
  double q2z_init = 1.0;
  double eps_q = 1e-9;
  double divergence_factor = 1e8;
  // window for the limit-cycle check, 0 disables it
  int stall_window = 250;
  bool record_trace = true;
};

/** @brief Scalars and overlaps of one sweep of the two-layer iteration. */
struct MlvampIterate {
  int t = 0;
  double q1x = 0, q2x = 0, q1z = 0, q2z = 0;  // raw values computed in this sweep
  double chi1x = 0, chi2z = 0, chi1z = 0, chi2x = 0;
  double dist = 0;  // ||h^(t+1) - h^(t)|| with h = [h2z; h1x]
  double m1x = NAN, q1x_ov = NAN, m2x = NAN, q2x_ov = NAN, m1z = NAN, q1z_ov = NAN;
  double angle = NAN;
};

struct MlvampResult {
  Eigen::VectorXd x_hat1, x_hat2, z_hat1, z_hat2;
  Eigen::VectorXd h1x, h2x, h1z, h2z;
  double q1x = 0, q2x = 0, q1z = 0, q2z = 0;
  double chi1x = 0, chi2x = 0, chi1z = 0, chi2z = 0;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::string message;
  std::vector<MlvampIterate> trace;

  const Eigen::VectorXd& x_hat() const { return x_hat1; }
  /** @brief Loss subgradient recovered from the prox relation, u = Q1z (h1z - z1). */
  Eigen::VectorXd loss_subgradient() const { return q1z * (h1z - z_hat1); }
};

inline double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return M_PI / 2.0;
  return std::acos(std::clamp(a.dot(b) / (na * nb), -1.0, 1.0));
}

namespace detail {

inline double geometric_damp(double old_v, double raw, double d) {
  if (d <= 0.0 || !(old_v > 0.0) || !(raw > 0.0)) return raw;
  return std::pow(old_v, d) * std::pow(raw, 1.0 - d);
}

inline double mean_derivative(const ScalarFunctionSpec& s, const Eigen::VectorXd& p, double gamma,
                              const Eigen::VectorXd& labels, Eigen::VectorXd& out) {
  bool lab = labels.size() == p.size();
  double acc = 0.0;
  out.resize(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    ScalarFunctionSpec si = lab ? s.with_label(labels[i]) : s;
    out[i] = prox(si, p[i], gamma);
    acc += prox_derivative(si, p[i], gamma);
  }
  return acc / double(p.size());
}

}  // namespace detail

/**
 * @brief Two-layer MLVAMP for a generalized linear estimation problem.
 *
 * Both LMMSE steps go through the cached SVD of F. Q-hat scalars are damped
 * geometrically; divergence is reported through the result, not thrown.
 */
inline MlvampResult mlvamp_solve(const GlmProblem& prob, const MlvampConfig& cfg = {}) {
  prob.validate();
  require(cfg.damping >= 0.0 && cfg.damping < 1.0, "damping must lie in [0, 1)");
  require(cfg.q1x_init > 0.0 && cfg.q2z_init > 0.0, "initial Q-hat values must be positive");
  const DesignMatrix& d = *prob.design;
  const Eigen::MatrixXd& F = d.F;
  const Eigen::Index M = d.M(), N = d.N();
  const Eigen::VectorXd lam = d.lambda_right();
  const Eigen::VectorXd lam_left = d.lambda_left();
  const double lam_max = lam.maxCoeff();
  const bool track = prob.x0.size() == N;
  Eigen::VectorXd z0;
  if (track) z0 = F * prob.x0;

  MlvampResult r;
  r.h1x = Eigen::VectorXd::Zero(N);
  r.h2z = Eigen::VectorXd::Zero(M);
  if (cfg.init == InitKind::Gaussian) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x1417a3bULL));
    std::normal_distribution<double> nd(0.0, cfg.init_scale);
    for (Eigen::Index i = 0; i < N; ++i) r.h1x[i] = nd(rng);
    for (Eigen::Index i = 0; i < M; ++i) r.h2z[i] = nd(rng);
  }
  double q1x = cfg.q1x_init, q2z = cfg.q2z_init;
  double q2x = 0.0, q1z = 0.0;
  bool first = true;
  const double h_ref = std::max(std::sqrt(r.h1x.squaredNorm() + r.h2z.squaredNorm()), std::sqrt(double(M + N)));
  const double eps = cfg.eps_q;
  Eigen::VectorXd xp, zp, tmp;
  double win_min = INFINITY, prev_win_min = INFINITY;

  auto fail = [&](const std::string& why) {
    r.diverged = true;
    r.message = why;
    return r;
  };
  auto lmmse = [&](double qx, double qz, const Eigen::VectorXd& hx, const Eigen::VectorXd& hz) {
    Eigen::VectorXd rhs = qx * hx + qz * (F.transpose() * hz);
    Eigen::VectorXd c = d.V.transpose() * rhs;
    c.array() /= (qx + qz * lam.array());
    return Eigen::VectorXd(d.V * c);
  };
  auto keep_pd = [&](double& qx, double& qz) {
    // Q2x I + Q2z F^T F must stay positive definite on the spectrum
    if (qx + std::min(qz * lam_max, 0.0) <= 0.0 || qx <= 0.0) qx = std::max(qx, eps);
    if (qz <= 0.0) qz = eps;
  };

  for (int t = 0; t < cfg.max_iter; ++t) {
    MlvampIterate it;
    it.t = t;
    // denoise x
    double g1x = detail::mean_derivative(prob.penalty, r.h1x, 1.0 / q1x, Eigen::VectorXd(), xp);
    r.x_hat1 = xp;
    double chi1x = std::clamp(g1x, 1e-8, 1.0) / q1x;
    double q2x_raw = 1.0 / chi1x - q1x;
    it.q2x = q2x_raw;
    double q2x_new = first ? q2x_raw : detail::geometric_damp(q2x, q2x_raw, cfg.damping);
    double q2z_use = q2z;
    keep_pd(q2x_new, q2z_use);
    q2x = q2x_new;
    r.h2x = (r.x_hat1 / chi1x - q1x * r.h1x) / q2x;
    // LMMSE z
    Eigen::VectorXd xt = lmmse(q2x, q2z_use, r.h2x, r.h2z);
    r.z_hat2 = F * xt;
    double chi2z = (lam_left.array() / (q2x + q2z_use * lam_left.array())).mean();
    double q1z_raw = 1.0 / chi2z - q2z_use;
    it.q1z = q1z_raw;
    double q1z_new = first ? q1z_raw : detail::geometric_damp(q1z, q1z_raw, cfg.damping);
    if (!(q1z_new > 0.0)) q1z_new = eps;
    q1z = q1z_new;
    r.h1z = (r.z_hat2 / chi2z - q2z_use * r.h2z) / q1z;
    // denoise z
    double g1z = detail::mean_derivative(prob.loss, r.h1z, 1.0 / q1z, prob.y, zp);
    r.z_hat1 = zp;
    double chi1z = std::clamp(g1z, 1e-8, 1.0) / q1z;
    double q2z_raw = 1.0 / chi1z - q1z;
    it.q2z = q2z_raw;
    double q2z_new = detail::geometric_damp(q2z_use, q2z_raw, cfg.damping);
    keep_pd(q2x, q2z_new);
    Eigen::VectorXd h2z_new = (r.z_hat1 / chi1z - q1z * r.h1z) / q2z_new;
    // LMMSE x
    r.x_hat2 = lmmse(q2x, q2z_new, r.h2x, h2z_new);
    double chi2x = (1.0 / (q2x + q2z_new * lam.array())).mean();
    double q1x_raw = 1.0 / chi2x - q2x;
    it.q1x = q1x_raw;
    double q1x_new = detail::geometric_damp(q1x, q1x_raw, cfg.damping);
    if (!(q1x_new > 0.0)) q1x_new = eps;
    Eigen::VectorXd h1x_new = (r.x_hat2 / chi2x - q2x * r.h2x) / q1x_new;

    double dist = std::sqrt((h1x_new - r.h1x).squaredNorm() + (h2z_new - r.h2z).squaredNorm());
    double hnorm = std::sqrt(h1x_new.squaredNorm() + h2z_new.squaredNorm());
    r.h1x = std::move(h1x_new);
    r.h2z = std::move(h2z_new);
    q1x = q1x_new;
    q2z = q2z_new;
    r.q1x = q1x;
    r.q2x = q2x;
    r.q1z = q1z;
    r.q2z = q2z;
    r.chi1x = chi1x;
    r.chi2x = chi2x;
    r.chi1z = chi1z;
    r.chi2z = chi2z;
    r.iterations = t + 1;
    first = false;

    it.chi1x = chi1x;
    it.chi2z = chi2z;
    it.chi1z = chi1z;
    it.chi2x = chi2x;
    it.dist = dist;
    if (track) {
      double n = double(N), m = double(M);
      it.m1x = prob.x0.dot(r.x_hat1) / n;
      it.q1x_ov = r.x_hat1.squaredNorm() / n;
      it.m2x = prob.x0.dot(r.x_hat2) / n;
      it.q2x_ov = r.x_hat2.squaredNorm() / n;
      it.m1z = z0.dot(r.z_hat1) / m;
      it.q1z_ov = r.z_hat1.squaredNorm() / m;
      it.angle = angle_between(prob.x0, r.x_hat1);
    }
    if (cfg.record_trace) r.trace.push_back(it);

    if (!std::isfinite(dist) || !std::isfinite(hnorm) || !std::isfinite(q1x) || !std::isfinite(q2z)) {
      std::ostringstream os;
      os << "non-finite iterate at t=" << t << " (Q1x=" << q1x << ", Q2x=" << q2x << ", Q1z=" << q1z
         << ", Q2z=" << q2z << ")";
      return fail(os.str());
    }
    if (hnorm > cfg.divergence_factor * h_ref) return fail("iterate norm exceeded divergence threshold");
    if (dist / std::sqrt(double(M + N)) <= cfg.tol) {
      r.converged = true;
      break;
    }
    // bounded but not contracting: no progress over a whole window
    win_min = std::min(win_min, dist);
    if (cfg.stall_window > 0 && (t + 1) % cfg.stall_window == 0) {
      if (win_min >= prev_win_min && win_min / std::sqrt(double(M + N)) > 1e3 * cfg.tol)
        return fail("iteration is not contracting (limit cycle)");
      prev_win_min = win_min;
      win_min = INFINITY;
    }
  }
  if (!r.converged && r.message.empty()) r.message = "max_iter reached";
  return r;
}

/**
 * @brief Normalised first-order optimality residual (1/sqrt N) * min ||v + F^T u||.
 *
 * The penalty side takes the minimum-norm subgradient coordinate-wise. For a
 * hinge loss pass the subgradient recovered from the prox relation; otherwise
 * the one-sided derivative is used at the kink.
 */
inline double optimality_residual(const GlmProblem& prob, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd* loss_subgradient = nullptr) {
  prob.validate();
  if (x.size() != prob.design->N()) throw InvalidInput("x has wrong length");
  Eigen::VectorXd z = prob.F() * x;
  Eigen::VectorXd u(z.size());
  const auto& L = prob.loss;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double y = prob.y[i], zi = z[i], g = 0.0;
    switch (L.kind) {
      case FunctionKind::Square: g = zi - y; break;
      case FunctionKind::Logistic: g = -y * detail::sigmoid(-y * zi); break;
      case FunctionKind::Hinge: g = (1.0 - y * zi > 0.0) ? -y : 0.0; break;
      default: break;
    }
    u[i] = g + L.l2_weight * zi;
  }
  if (loss_subgradient && L.kind == FunctionKind::Hinge) u = *loss_subgradient;
  Eigen::VectorXd g = prob.F().transpose() * u + prob.penalty.l2_weight * x;
  const double l1 = prob.penalty.l1_weight;
  Eigen::VectorXd res(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (l1 > 0.0 && x[i] == 0.0)
      res[i] = std::max(0.0, std::abs(g[i]) - l1);
    else
      res[i] = g[i] + l1 * (x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0));
  }
  return res.norm() / std::sqrt(double(x.size()));
}

}  // namespace glmrot

#pragma once
#include <Eigen/Dense>
#include <cmath>

#include "mlvamp.hpp"

namespace glmrot {

struct BaselineConfig {
  double rho = 1.0;
  double relaxation = 1.5;
  double tol = 1e-8;
  int max_iter = 20000;
};

struct BaselineResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0, dual_residual = 0;
};

/**
 * @brief Over-relaxed ADMM on the split w = x, z = F x.
 *
 * The x-update is a ridge least-squares solve through the cached SVD; the
 * (w, z) update is two separable prox evaluations. Returns w, which carries
 * exact zeros for an l1 penalty.
 */
inline BaselineResult baseline_solve(const GlmProblem& prob, const BaselineConfig& cfg = {}) {
  prob.validate();
  require(cfg.rho > 0.0, "ADMM penalty must be positive");
  require(cfg.relaxation > 0.0 && cfg.relaxation < 2.0, "relaxation must lie in (0, 2)");
  const DesignMatrix& d = *prob.design;
  const Eigen::MatrixXd& F = d.F;
  const Eigen::Index M = d.M(), N = d.N();
  const Eigen::ArrayXd inv = 1.0 / (1.0 + d.lambda_right().array());
  const double g = 1.0 / cfg.rho, a = cfg.relaxation;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(N), w = x, u1 = x;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(M), u2 = z, Fx(M);
  BaselineResult res;
  for (int k = 0; k < cfg.max_iter; ++k) {
    Eigen::VectorXd rhs = (w - u1) + F.transpose() * (z - u2);
    Eigen::VectorXd c = d.V.transpose() * rhs;
    c.array() *= inv;
    x = d.V * c;
    Fx = F * x;
    Eigen::VectorXd xr = a * x + (1.0 - a) * w;
    Eigen::VectorXd zr = a * Fx + (1.0 - a) * z;
    Eigen::VectorXd w_old = w, z_old = z;
    w = prox(prob.penalty, Eigen::VectorXd(xr + u1), g);
    z = prox(prob.loss, Eigen::VectorXd(zr + u2), g, prob.y);
    u1 += xr - w;
    u2 += zr - z;
    res.primal_residual = std::sqrt((x - w).squaredNorm() + (Fx - z).squaredNorm()) / std::sqrt(double(M + N));
    res.dual_residual = cfg.rho * ((w - w_old) + F.transpose() * (z - z_old)).norm() / std::sqrt(double(N));
    res.iterations = k + 1;
    if (!std::isfinite(res.primal_residual)) break;
    if (res.primal_residual <= cfg.tol && res.dual_residual <= cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.x = w;
  return res;
}

}  // namespace glmrot

#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ensembles.hpp"
#include "errors.hpp"
#include "prox.hpp"
#include "quadrature.hpp"

namespace glmrot {

/** @brief Everything the scalar recursion needs about a model. */
struct ScalarModel {
  SpectralDensity spectrum;
  TeacherSpec teacher;
  ScalarFunctionSpec loss;
  ScalarFunctionSpec penalty;
  int quad_order = 60;

  double alpha() const { return spectrum.alpha; }
  double rho_x() const { return teacher.prior.rho_x(); }
  /** @brief Second moment of z0 = F x0, rho_x E[lambda] / alpha. */
  double rho_z() const { return rho_x() * spectrum.mean() / alpha(); }
};

/** @brief Conjugate (hatted) parameters of one channel. */
struct Hat {
  double Q = 1.0, m = 0.0, chi = 1.0;
};

/** @brief Overlaps produced by one module: m = E[x0 x], chi = response, q = E[x^2]. */
struct Overlap {
  double m = 0.0, chi = 0.0, q = 0.0;
};

struct SEState {
  Hat h1x, h2x, h1z, h2z;
  Overlap o1x, o2z, o1z, o2x;
  int iteration = 0;
};

/** @brief E[prox^2], E[prox'], E[x0 prox] of one denoiser. */
struct DenoiserMoments {
  double e_prox_sq = 0.0, e_deriv = 0.0, e_x0_prox = 0.0;
  double e_value = 0.0;   // E[f(prox)]
  double e_moreau = 0.0;  // E[M_{f/Q}(H)]
  double e_h_sq = 0.0;    // E[H^2]
};

namespace detail {

inline double phi_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
inline double Phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// P(|W| > l) for W ~ N(0, v), with the convention that l = 0 counts everything
inline double tail2(double l, double v) {
  if (l <= 0.0) return 1.0;
  if (v <= 0.0) return 0.0;
  return std::erfc(l / std::sqrt(2.0 * v));
}

// E[soft(W, l)^2] for W ~ N(0, v)
inline double soft_sq(double l, double v) {
  if (v <= 0.0) return 0.0;
  return (l * l + v) * tail2(l, v) - l * std::sqrt(2.0 * v / M_PI) * std::exp(-l * l / (2.0 * v));
}

}  // namespace detail

/**
 * @brief Elastic-net denoiser moments under the Gauss-Bernoulli prior, closed form.
 *
 * H = (m_hat x0 + sqrt(chi_hat) xi) / Q_hat; prox is soft(Q H, l1) / (Q + l2).
 */
inline DenoiserMoments en_closed_forms(double m_hat, double q_hat, double chi_hat, const PriorSpec& prior,
                                       const ScalarFunctionSpec& penalty) {
  if (!(q_hat > 0.0)) throw InvalidInput("Q_hat must be positive in elastic-net moments");
  if (chi_hat < 0.0) throw InvalidInput("chi_hat must be non-negative");
  const double l1 = penalty.l1_weight, l2 = penalty.l2_weight, rho = prior.rho, s2 = prior.sigma * prior.sigma;
  const double v0 = chi_hat, v1 = chi_hat + s2 * m_hat * m_hat;
  const double den = q_hat + l2;
  DenoiserMoments r;
  r.e_deriv = (q_hat / den) * ((1.0 - rho) * detail::tail2(l1, v0) + rho * detail::tail2(l1, v1));
  r.e_x0_prox = rho * s2 * m_hat * detail::tail2(l1, v1) / den;
  r.e_prox_sq = ((1.0 - rho) * detail::soft_sq(l1, v0) + rho * detail::soft_sq(l1, v1)) / (den * den);
  r.e_h_sq = ((1.0 - rho) * v0 + rho * v1) / (q_hat * q_hat);
  return r;
}

namespace detail {

// E over H = W / Q of the penalty's value and Moreau envelope, mixture of two centred Gaussians
inline void en_envelope_moments(double m_hat, double q_hat, double chi_hat, const PriorSpec& prior,
                                const ScalarFunctionSpec& penalty, DenoiserMoments& r) {
  const double rho = prior.rho, s2 = prior.sigma * prior.sigma;
  const double vs[2] = {chi_hat, chi_hat + s2 * m_hat * m_hat};
  const double ws[2] = {1.0 - rho, rho};
  const double t = penalty.l1_weight;
  r.e_value = r.e_moreau = 0.0;
  for (int k = 0; k < 2; ++k) {
    if (ws[k] <= 0.0) continue;
    auto fn = [&](double w) {
      Eigen::Array2d out;
      double h = w / q_hat;
      double x = prox(penalty, h, 1.0 / q_hat);
      out[0] = value(penalty, x);
      out[1] = out[0] + 0.5 * q_hat * (x - h) * (x - h);
      return out;
    };
    Eigen::Array2d e = gaussian_piecewise_expectation(fn, std::sqrt(vs[k]), {-t, t});
    r.e_value += ws[k] * e[0];
    r.e_moreau += ws[k] * e[1];
  }
}

inline std::vector<double> loss_breaks_w(const ScalarFunctionSpec& loss, double q_hat, double y) {
  std::vector<double> b{0.0};
  if (loss.kind == FunctionKind::Hinge && y != 0.0) {
    double g = 1.0 / q_hat, c = 1.0 + g * loss.l2_weight;
    // kinks in p at y p = c - g y^2 and y p = c, mapped to W = Q p
    b.push_back(q_hat * (c - g * y * y) / y);
    b.push_back(q_hat * c / y);
  }
  return b;
}

}  // namespace detail

/**
 * @brief Moments of the loss denoiser with z0 ~ N(0, rho_z) and y = phi(z0, omega).
 *
 * Sign teacher: reduced to one dimension by conditioning z0 on W and folding
 * y = -1 onto y = +1; integrated piecewise between the prox kinks.
 * Linear-Gaussian teacher: tensor Gauss-Hermite over the joint law of (W, y).
 */
inline DenoiserMoments z_expectations(const ScalarModel& model, double m_hat, double q_hat, double chi_hat) {
  if (!(q_hat > 0.0)) throw InvalidInput("Q_hat must be positive in loss moments");
  if (chi_hat < 0.0) throw InvalidInput("chi_hat must be non-negative");
  const double rz = model.rho_z();
  const double gamma = 1.0 / q_hat;
  const auto& L = model.loss;
  DenoiserMoments r;
  // per-point integrand: prox^2, prox', z0-weight * prox, value, moreau, H^2
  auto eval = [&](double w, double y, Eigen::Array<double, 6, 1>& o, double pw, double zw) {
    double h = w / q_hat;
    auto s = L.with_label(y);
    double x = prox(s, h, gamma);
    double dx = prox_derivative(s, h, gamma);
    double f = value(s, x);
    o[0] = pw * x * x;
    o[1] = pw * dx;
    o[2] = zw * x;
    o[3] = pw * f;
    o[4] = pw * (f + 0.5 * q_hat * (x - h) * (x - h));
    o[5] = pw * h * h;
  };
  using A6 = Eigen::Array<double, 6, 1>;
  A6 acc = A6::Zero();
  if (model.teacher.kind == TeacherKind::Sign) {
    const double a = m_hat * std::sqrt(rz);
    const double v = a * a + chi_hat;
    if (v <= 0.0) {
      // W = 0: z0 independent of the prox argument
      A6 o;
      eval(0.0, 1.0, o, 1.0, 2.0 * std::sqrt(rz) / std::sqrt(2.0 * M_PI));
      acc = o;
    } else {
      const double c = a / v, s = std::sqrt(chi_hat / v);
      auto fn = [&](double w) {
        double mu = c * w, pr, eu;
        if (s > 1e-300) {
          pr = detail::Phi_cdf(mu / s);
          eu = mu * pr + s * detail::phi_pdf(mu / s);
        } else {
          pr = mu > 0 ? 1.0 : (mu < 0 ? 0.0 : 0.5);
          eu = mu > 0 ? mu : 0.0;
        }
        A6 o;
        eval(w, 1.0, o, 2.0 * pr, 2.0 * std::sqrt(rz) * eu);
        return o;
      };
      acc = gaussian_piecewise_expectation(fn, std::sqrt(v), detail::loss_breaks_w(L, q_hat, 1.0), 16);
    }
  } else {
    // (W, y) jointly Gaussian; z0 = b . (W, y) + independent part
    const double d0 = model.teacher.delta0;
    Eigen::Matrix2d S;
    S << m_hat * m_hat * rz + chi_hat, m_hat * rz, m_hat * rz, rz + d0;
    Eigen::Vector2d cz(m_hat * rz, rz);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
    Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);
    Eigen::Matrix2d E = es.eigenvectors();
    Eigen::Vector2d pinv_ev;
    for (int k = 0; k < 2; ++k) pinv_ev[k] = ev[k] > 1e-14 * ev.maxCoeff() ? 1.0 / ev[k] : 0.0;
    Eigen::Vector2d b = E * pinv_ev.asDiagonal() * E.transpose() * cz;
    const auto& gh = gauss_hermite(model.quad_order);
    for (std::size_t i = 0; i < gh.size(); ++i)
      for (std::size_t j = 0; j < gh.size(); ++j) {
        Eigen::Vector2d g(gh.nodes[i], gh.nodes[j]);
        Eigen::Vector2d wy = E * (ev.cwiseSqrt().asDiagonal() * g);
        double wt = gh.weights[i] * gh.weights[j];
        A6 o;
        eval(wy[0], wy[1], o, wt, wt * b.dot(wy));
        acc += o;
      }
  }
  r.e_prox_sq = acc[0];
  r.e_deriv = acc[1];
  r.e_x0_prox = acc[2];
  r.e_value = acc[3];
  r.e_moreau = acc[4];
  r.e_h_sq = acc[5];
  return r;
}

/** @brief Penalty denoiser moments including value and envelope terms. */
inline DenoiserMoments x_expectations(const ScalarModel& model, double m_hat, double q_hat, double chi_hat,
                                      bool with_envelope = false) {
  DenoiserMoments r = en_closed_forms(m_hat, q_hat, chi_hat, model.teacher.prior, model.penalty);
  if (with_envelope) detail::en_envelope_moments(m_hat, q_hat, chi_hat, model.teacher.prior, model.penalty, r);
  return r;
}

namespace detail {

inline void check_lmmse(const ScalarModel& model, double q2x, double q2z) {
  double lo = model.spectrum.lambda_min(), hi = model.spectrum.lambda_max();
  if (!(q2x + q2z * lo > 0.0) || !(q2x + q2z * hi > 0.0) || !std::isfinite(q2x) || !std::isfinite(q2z)) {
    std::ostringstream os;
    os << "LMMSE denominator not positive on the spectrum (Q2x=" << q2x << ", Q2z=" << q2z << ")";
    throw NumericalError(os.str());
  }
}

// {chi, m, q} for the z-side LMMSE module
inline Overlap lmmse_z(const ScalarModel& model, const Hat& h2x, const Hat& h2z) {
  detail::check_lmmse(model, h2x.Q, h2z.Q);
  const double rx = model.rho_x(), a = model.alpha();
  Eigen::Array3d e = model.spectrum.expect([&](double l) {
    double D = h2x.Q + l * h2z.Q, mm = h2x.m + l * h2z.m;
    Eigen::Array3d o;
    o << l / D, l * mm / D, (l * (h2x.chi + l * h2z.chi) + rx * l * mm * mm) / (D * D);
    return o;
  });
  return {rx * e[1] / a, e[0] / a, e[2] / a};
}

inline Overlap lmmse_x(const ScalarModel& model, const Hat& h2x, const Hat& h2z) {
  detail::check_lmmse(model, h2x.Q, h2z.Q);
  const double rx = model.rho_x();
  Eigen::Array3d e = model.spectrum.expect([&](double l) {
    double D = h2x.Q + l * h2z.Q, mm = h2x.m + l * h2z.m;
    Eigen::Array3d o;
    o << 1.0 / D, mm / D, ((h2x.chi + l * h2z.chi) + rx * mm * mm) / (D * D);
    return o;
  });
  return {rx * e[1], e[0], e[2]};
}

// message update: hat_out from overlaps of a module and the hat that fed it
inline Hat extrinsic(const Overlap& o, const Hat& in, double rho) {
  if (!(o.chi > 0.0) || !std::isfinite(o.chi)) {
    std::ostringstream os;
    os << "response chi=" << o.chi << " is not positive";
    throw NumericalError(os.str());
  }
  Hat h;
  h.Q = 1.0 / o.chi - in.Q;
  h.m = o.m / (rho * o.chi) - in.m;
  h.chi = o.q / (o.chi * o.chi) - o.m * o.m / (rho * o.chi * o.chi) - in.chi;
  return h;
}

inline Overlap denoiser_overlap(const DenoiserMoments& d, double q_hat) {
  return {d.e_x0_prox, d.e_deriv / q_hat, d.e_prox_sq};
}

}  // namespace detail

/**
 * @brief One sweep of the scalar recursion: x-denoiser, z-LMMSE, z-denoiser, x-LMMSE.
 *
 * Reads h1x and h2z of `s`; returns the state with every field of the sweep
 * filled and h1x, h2z advanced to t + 1.
 */
inline SEState se_step(const ScalarModel& model, const SEState& s) {
  const double rx = model.rho_x(), rz = model.rho_z();
  SEState n = s;
  n.o1x = detail::denoiser_overlap(x_expectations(model, s.h1x.m, s.h1x.Q, s.h1x.chi), s.h1x.Q);
  n.h2x = detail::extrinsic(n.o1x, s.h1x, rx);
  n.o2z = detail::lmmse_z(model, n.h2x, s.h2z);
  n.h1z = detail::extrinsic(n.o2z, s.h2z, rz);
  if (!(n.h1z.Q > 0.0)) throw NumericalError("Q1z became non-positive in the scalar recursion");
  n.o1z = detail::denoiser_overlap(z_expectations(model, n.h1z.m, n.h1z.Q, std::max(n.h1z.chi, 0.0)), n.h1z.Q);
  n.h2z = detail::extrinsic(n.o1z, n.h1z, rz);
  n.o2x = detail::lmmse_x(model, n.h2x, n.h2z);
  n.h1x = detail::extrinsic(n.o2x, n.h2x, rx);
  if (!(n.h1x.Q > 0.0)) throw NumericalError("Q1x became non-positive in the scalar recursion");
  n.h1x.chi = std::max(n.h1x.chi, 0.0);
  n.iteration = s.iteration + 1;
  return n;
}

/** @brief Initial state matching a Gaussian-initialised solver with noise scale `scale`. */
inline SEState se_initial_state(double q1x = 1.0, double q2z = 1.0, double scale = 1.0) {
  SEState s;
  s.h1x = {q1x, 0.0, q1x * q1x * scale * scale};
  s.h2z = {q2z, 0.0, q2z * q2z * scale * scale};
  return s;
}

struct SEConfig {
  double tol = 1e-10;
  int max_iter = 2000;
  double damping = 0.5;
  int stall_window = 50;
};

struct SEResult {
  SEState state;
  bool converged = false;
  int iterations = 0;
  double residual = NAN;
  double final_damping = 0.0;
  std::string message;
};

namespace detail {

inline std::array<double, 12> hats(const SEState& s) {
  return {s.h1x.Q, s.h1x.m, s.h1x.chi, s.h2x.Q, s.h2x.m, s.h2x.chi,
          s.h1z.Q, s.h1z.m, s.h1z.chi, s.h2z.Q, s.h2z.m, s.h2z.chi};
}

inline double hat_change(const SEState& a, const SEState& b) {
  auto x = hats(a), y = hats(b);
  double r = 0.0;
  for (int i = 0; i < 12; ++i) r = std::max(r, std::abs(x[i] - y[i]) / std::max(1.0, std::abs(y[i])));
  return r;
}

inline Hat damp_hat(const Hat& old_h, const Hat& raw, double d) {
  Hat h;
  h.Q = (old_h.Q > 0 && raw.Q > 0) ? std::pow(old_h.Q, d) * std::pow(raw.Q, 1.0 - d) : raw.Q;
  h.m = d * old_h.m + (1.0 - d) * raw.m;
  h.chi = d * old_h.chi + (1.0 - d) * raw.chi;
  return h;
}

}  // namespace detail

/**
 * @brief Fixed point of the recursion with damping on the fed-back hats.
 *
 * When the change stalls for `stall_window` sweeps the step weight (1 - damping)
 * is halved, at most three times.
 */
inline SEResult se_fixed_point(const ScalarModel& model, const SEState& init, const SEConfig& cfg = {}) {
  require(cfg.damping >= 0.0 && cfg.damping < 1.0, "damping must lie in [0, 1)");
  SEResult res;
  SEState cur = init;
  double d = cfg.damping;
  int halvings = 0;
  std::vector<double> hist;
  SEState prev_full;
  bool have_prev = false;
  for (int t = 0; t < cfg.max_iter; ++t) {
    SEState raw = se_step(model, cur);
    double change = have_prev ? detail::hat_change(raw, prev_full) : INFINITY;
    prev_full = raw;
    have_prev = true;
    hist.push_back(change);
    res.iterations = t + 1;
    if (change <= cfg.tol) {
      res.state = raw;
      res.converged = true;
      break;
    }
    int w = cfg.stall_window;
    if (int(hist.size()) > 2 * w && halvings < 3) {
      double recent = *std::min_element(hist.end() - w, hist.end());
      double older = *std::min_element(hist.end() - 2 * w, hist.end() - w);
      if (recent > 0.5 * older) {
        d = 1.0 - 0.5 * (1.0 - d);
        ++halvings;
        hist.clear();
      }
    }
    SEState next = raw;
    next.h1x = detail::damp_hat(cur.h1x, raw.h1x, d);
    next.h2z = detail::damp_hat(cur.h2z, raw.h2z, d);
    cur = next;
    res.state = raw;
  }
  res.final_damping = d;
  res.residual = hist.empty() ? NAN : hist.back();
  if (!res.converged) {
    std::ostringstream os;
    os << "scalar recursion did not converge in " << cfg.max_iter << " sweeps (last change " << res.residual << ")";
    res.message = os.str();
  }
  return res;
}

/**
 * @brief Max residual of the twelve fixed-point equations at the given hats.
 *
 * Overlaps are recomputed from both sides of each channel independently of
 * the sweep that produced the state.
 */
inline double fixed_point_residual(const ScalarModel& model, const SEState& s) {
  const double rx = model.rho_x(), rz = model.rho_z();
  Overlap dx = detail::denoiser_overlap(x_expectations(model, s.h1x.m, s.h1x.Q, s.h1x.chi), s.h1x.Q);
  Overlap lx = detail::lmmse_x(model, s.h2x, s.h2z);
  Overlap dz = detail::denoiser_overlap(z_expectations(model, s.h1z.m, s.h1z.Q, std::max(0.0, s.h1z.chi)), s.h1z.Q);
  Overlap lz = detail::lmmse_z(model, s.h2x, s.h2z);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  double r = 0.0;
  for (auto [a, b] : {std::pair{dx, lx}, std::pair{dz, lz}}) {
    r = std::max({r, rel(a.chi, b.chi), rel(a.m, b.m), rel(a.q, b.q)});
  }
  auto chk = [&](const Overlap& o, const Hat& h1, const Hat& h2, double rho) {
    r = std::max(r, rel(h1.Q + h2.Q, 1.0 / o.chi));
    r = std::max(r, rel(h1.m + h2.m, o.m / (rho * o.chi)));
    r = std::max(r, rel(h1.chi + h2.chi, o.q / (o.chi * o.chi) - o.m * o.m / (rho * o.chi * o.chi)));
  };
  chk(dx, s.h1x, s.h2x, rx);
  chk(dz, s.h1z, s.h2z, rz);
  return r;
}

struct Macroscopics {
  double m_x = 0, q_x = 0, chi_x = 0, m_z = 0, q_z = 0, chi_z = 0;
  double mse = 0, angle = 0;
};

/** @brief Overlaps, estimation error and angle at a state of the recursion. */
inline Macroscopics overlaps_and_errors(const ScalarModel& model, const SEState& s) {
  Macroscopics r;
  Overlap x = detail::denoiser_overlap(x_expectations(model, s.h1x.m, s.h1x.Q, s.h1x.chi), s.h1x.Q);
  Overlap z = detail::denoiser_overlap(z_expectations(model, s.h1z.m, s.h1z.Q, std::max(0.0, s.h1z.chi)), s.h1z.Q);
  r.m_x = x.m;
  r.q_x = x.q;
  r.chi_x = x.chi;
  r.m_z = z.m;
  r.q_z = z.q;
  r.chi_z = z.chi;
  const double rx = model.rho_x();
  r.mse = rx + r.q_x - 2.0 * r.m_x;
  r.angle = r.q_x > 0 ? std::acos(std::clamp(r.m_x / std::sqrt(rx * r.q_x), -1.0, 1.0)) : M_PI / 2.0;
  return r;
}

/** @brief Free variables of the replica potential: twelve hats and six overlaps. */
struct FreeEnergyPoint {
  SEState hats;
  double m_x = 0, q_x = 0, chi_x = 0, m_z = 0, q_z = 0, chi_z = 0;
};

inline FreeEnergyPoint free_energy_point(const ScalarModel& model, const SEState& s) {
  Macroscopics mc = overlaps_and_errors(model, s);
  return {s, mc.m_x, mc.q_x, mc.chi_x, mc.m_z, mc.q_z, mc.chi_z};
}

/**
 * @brief Zero-temperature potential g_F + g_G - g_S at an arbitrary point.
 *
 * Its extremum is minus the free energy. The log-determinant of the
 * finite-temperature Gaussian term vanishes in this limit.
 */
inline double free_energy_potential(const ScalarModel& model, const FreeEnergyPoint& p) {
  const double a = model.alpha(), rx = model.rho_x(), rz = model.rho_z();
  const SEState& s = p.hats;
  DenoiserMoments dx = x_expectations(model, s.h1x.m, s.h1x.Q, s.h1x.chi, true);
  DenoiserMoments dz = z_expectations(model, s.h1z.m, s.h1z.Q, std::max(0.0, s.h1z.chi));
  double phi_x = 0.5 * s.h1x.Q * dx.e_h_sq - dx.e_moreau;
  double phi_z = 0.5 * s.h1z.Q * dz.e_h_sq - dz.e_moreau;
  double gF = 0.5 * p.q_x * s.h1x.Q - 0.5 * p.chi_x * s.h1x.chi - s.h1x.m * p.m_x - a * s.h1z.m * p.m_z +
              0.5 * a * (p.q_z * s.h1z.Q - p.chi_z * s.h1z.chi) + phi_x + a * phi_z;
  detail::check_lmmse(model, s.h2x.Q, s.h2z.Q);
  Eigen::Array2d e = model.spectrum.expect([&](double l) {
    double D = s.h2x.Q + l * s.h2z.Q, mm = s.h2x.m + l * s.h2z.m;
    Eigen::Array2d o;
    o << (s.h2x.chi + l * s.h2z.chi) / D, rx * mm * mm / D;
    return o;
  });
  double gG = 0.5 * p.q_x * s.h2x.Q - 0.5 * p.chi_x * s.h2x.chi - p.m_x * s.h2x.m - a * p.m_z * s.h2z.m +
              0.5 * a * (p.q_z * s.h2z.Q - p.chi_z * s.h2z.chi) + 0.5 * (e[0] + e[1]);
  double gS = 0.5 * (p.q_x / p.chi_x - p.m_x * p.m_x / (rx * p.chi_x)) +
              0.5 * a * (p.q_z / p.chi_z - p.m_z * p.m_z / (rz * p.chi_z));
  return gF + gG - gS;
}

/** @brief Free energy -(g_F + g_G - g_S) at a fixed point; equals the limiting optimal cost / N. */
inline double free_energy(const ScalarModel& model, const SEState& fixed_point) {
  return -free_energy_potential(model, free_energy_point(model, fixed_point));
}

/** @brief Direct energy E[f(x)] + alpha E[g(y, z)] at a fixed point. */
inline double energy_at_fixed_point(const ScalarModel& model, const SEState& s) {
  DenoiserMoments dx = x_expectations(model, s.h1x.m, s.h1x.Q, s.h1x.chi, true);
  DenoiserMoments dz = z_expectations(model, s.h1z.m, s.h1z.Q, std::max(0.0, s.h1z.chi));
  return dx.e_value + model.alpha() * dz.e_value;
}

}  // namespace glmrot

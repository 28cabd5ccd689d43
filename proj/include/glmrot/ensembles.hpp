#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"

namespace glmrot {

enum class EnsembleKind { GaussianIid, RowOrthogonal, SquaredUniform, Empirical };

inline std::string to_string(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::GaussianIid: return "gaussian_iid";
    case EnsembleKind::RowOrthogonal: return "row_orthogonal";
    case EnsembleKind::SquaredUniform: return "squared_uniform";
    case EnsembleKind::Empirical: return "empirical";
  }
  return "?";
}

inline EnsembleKind ensemble_kind_from_string(const std::string& s) {
  if (s == "gaussian_iid" || s == "gaussian") return EnsembleKind::GaussianIid;
  if (s == "row_orthogonal" || s == "row_orth") return EnsembleKind::RowOrthogonal;
  if (s == "squared_uniform") return EnsembleKind::SquaredUniform;
  throw InvalidInput("unknown ensemble '" + s + "'");
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/**
 * @brief Limiting eigenvalue law p_lambda of F^T F (N eigenvalues, alpha = M/N).
 *
 * Point masses are listed in `atoms`; the continuous part is carried by a
 * quadrature rule whose weights sum to its mass.
 */
struct SpectralDensity {
  EnsembleKind kind = EnsembleKind::GaussianIid;
  double alpha = 1.0;
  std::vector<double> atom_values, atom_weights;
  std::vector<double> nodes, weights;
  double support_lo = 0.0, support_hi = 0.0;
  double continuous_mass = 0.0;

  /** @brief E_{p_lambda}[fn(lambda)]. */
  template <class F>
  auto expect(F&& fn) const {
    using R = decltype(fn(1.0));
    R acc = fn(1.0) * 0.0;
    for (std::size_t i = 0; i < atom_values.size(); ++i) acc += fn(atom_values[i]) * atom_weights[i];
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += fn(nodes[i]) * weights[i];
    return acc;
  }

  double mean() const { return expect([](double l) { return l; }); }

  /** @brief Smallest / largest eigenvalue of F^T F in the support. */
  double lambda_min() const {
    double m = continuous_mass > 0 ? support_lo : INFINITY;
    for (std::size_t i = 0; i < atom_values.size(); ++i)
      if (atom_weights[i] > 0) m = std::min(m, atom_values[i]);
    return m;
  }
  double lambda_max() const {
    double m = continuous_mass > 0 ? support_hi : 0.0;
    for (std::size_t i = 0; i < atom_values.size(); ++i)
      if (atom_weights[i] > 0) m = std::max(m, atom_values[i]);
    return m;
  }
  /** @brief Extreme eigenvalues of F F^T (M of them). */
  double left_lambda_min() const {
    if (alpha > 1.0) return 0.0;
    double m = INFINITY;
    if (continuous_mass > 0) m = support_lo;
    for (std::size_t i = 0; i < atom_values.size(); ++i)
      if (atom_weights[i] > 0 && atom_values[i] > 0) m = std::min(m, atom_values[i]);
    return m;
  }
  double left_lambda_max() const { return lambda_max(); }

  /** @brief Cumulative distribution of p_lambda. */
  double cdf(double x) const;
};

namespace detail {

inline void mp_bounds(double alpha, double& a, double& b) {
  double c = 1.0 / alpha;
  a = (1.0 - std::sqrt(c)) * (1.0 - std::sqrt(c));
  b = (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
}

// Marchenko-Pastur bulk in the angle variable lambda = m + h cos(theta);
// the square-root edges become smooth and Gauss-Legendre converges fast
inline double mp_integral(double alpha, double theta_lo, double theta_hi, int order,
                          std::vector<double>* nodes, std::vector<double>* weights) {
  double a, b;
  mp_bounds(alpha, a, b);
  double m = 0.5 * (a + b), h = 0.5 * (b - a), c = 1.0 / alpha;
  const auto& gl = gauss_legendre(order);
  double half = 0.5 * (theta_hi - theta_lo), mid = 0.5 * (theta_hi + theta_lo);
  double total = 0.0;
  for (std::size_t i = 0; i < gl.size(); ++i) {
    double th = mid + half * gl.nodes[i];
    double lam = m + h * std::cos(th);
    double s = std::sin(th);
    // h^2 sin^2 / lambda stays finite as lambda -> 0 when alpha = 1
    double w = lam > 0 ? h * h * s * s / (2.0 * M_PI * c * lam) : 0.0;
    w *= gl.weights[i] * half;
    total += w;
    if (nodes) {
      nodes->push_back(lam);
      weights->push_back(w);
    }
  }
  return total;
}

}  // namespace detail

inline double SpectralDensity::cdf(double x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < atom_values.size(); ++i)
    if (atom_values[i] <= x) acc += atom_weights[i];
  if (continuous_mass <= 0 || x <= support_lo) return acc;
  if (x >= support_hi) return acc + continuous_mass;
  switch (kind) {
    case EnsembleKind::GaussianIid: {
      double m = 0.5 * (support_lo + support_hi), h = 0.5 * (support_hi - support_lo);
      double th = std::acos(std::clamp((x - m) / h, -1.0, 1.0));
      return acc + detail::mp_integral(alpha, th, M_PI, 96, nullptr, nullptr);
    }
    case EnsembleKind::SquaredUniform: {
      double lo = std::sqrt(support_lo), hi = std::sqrt(support_hi);
      return acc + continuous_mass * (std::sqrt(x) - lo) / (hi - lo);
    }
    default: break;
  }
  // generic: trapezoid on the stored nodes is not meaningful; sum node weights
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] <= x) acc += weights[i];
  return acc;
}

/** @brief Limiting spectral law of the given ensemble; `order` nodes for the bulk. */
inline SpectralDensity spectral_density(EnsembleKind kind, double alpha, int order = 200) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("alpha must be positive");
  require(order >= 2, "quadrature order must be >= 2");
  SpectralDensity d;
  d.kind = kind;
  d.alpha = alpha;
  double zero_mass = std::max(0.0, 1.0 - alpha), bulk = std::min(1.0, alpha);
  if (zero_mass > 0) {
    d.atom_values.push_back(0.0);
    d.atom_weights.push_back(zero_mass);
  }
  switch (kind) {
    case EnsembleKind::GaussianIid: {
      detail::mp_bounds(alpha, d.support_lo, d.support_hi);
      double tot = detail::mp_integral(alpha, 0.0, M_PI, order, &d.nodes, &d.weights);
      for (double& w : d.weights) w *= bulk / tot;
      d.continuous_mass = bulk;
      break;
    }
    case EnsembleKind::RowOrthogonal:
      d.atom_values.push_back(1.0);
      d.atom_weights.push_back(bulk);
      d.support_lo = d.support_hi = 1.0;
      break;
    case EnsembleKind::SquaredUniform: {
      double lo = (1.0 - alpha) * (1.0 - alpha), hi = (1.0 + alpha) * (1.0 + alpha);
      d.support_lo = lo * lo;
      d.support_hi = hi * hi;
      const auto& gl = gauss_legendre(order);
      for (std::size_t i = 0; i < gl.size(); ++i) {
        double s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[i];
        d.nodes.push_back(s * s);
        d.weights.push_back(bulk * 0.5 * gl.weights[i]);
      }
      d.continuous_mass = bulk;
      break;
    }
    case EnsembleKind::Empirical: throw InvalidInput("use empirical_spectrum for sampled designs");
  }
  return d;
}

/** @brief F = U diag(s) V^T with Haar or Gaussian factors. */
struct DesignMatrix {
  Eigen::MatrixXd F, U, V;
  Eigen::VectorXd s;  // min(M, N) singular values

  Eigen::Index M() const { return F.rows(); }
  Eigen::Index N() const { return F.cols(); }
  double alpha() const { return double(F.rows()) / double(F.cols()); }

  /** @brief Eigenvalues of F^T F aligned with the columns of V. */
  Eigen::VectorXd lambda_right() const {
    Eigen::VectorXd l = Eigen::VectorXd::Zero(N());
    l.head(s.size()) = s.array().square().matrix();
    return l;
  }
  /** @brief Eigenvalues of F F^T aligned with the columns of U. */
  Eigen::VectorXd lambda_left() const {
    Eigen::VectorXd l = Eigen::VectorXd::Zero(M());
    l.head(s.size()) = s.array().square().matrix();
    return l;
  }
};

/** @brief Spectrum of a sampled design as N equal atoms. */
inline SpectralDensity empirical_spectrum(const DesignMatrix& d) {
  SpectralDensity sd;
  sd.kind = EnsembleKind::Empirical;
  sd.alpha = d.alpha();
  Eigen::VectorXd l = d.lambda_right();
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    sd.atom_values.push_back(l[i]);
    sd.atom_weights.push_back(1.0 / double(l.size()));
  }
  sd.support_lo = l.minCoeff();
  sd.support_hi = l.maxCoeff();
  return sd;
}

namespace detail {

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Eigen::MatrixXd A(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) A(i, j) = nd(rng);
  return A;
}

}  // namespace detail

/** @brief Haar orthogonal matrix: QR of a Gaussian matrix with the sign of diag(R) folded into Q. */
inline Eigen::MatrixXd haar_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(detail::gaussian_matrix(n, n, rng));
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd& R = qr.matrixQR();
  for (Eigen::Index i = 0; i < n; ++i)
    if (R(i, i) < 0) Q.col(i) *= -1.0;
  return Q;
}

/** @brief Sample an M x N design from the ensemble. */
inline DesignMatrix sample_design(EnsembleKind kind, Eigen::Index M, Eigen::Index N, std::uint64_t seed) {
  if (M < 1 || N < 1) throw InvalidInput("design dimensions must be positive");
  std::mt19937_64 rng(splitmix64(seed));
  DesignMatrix d;
  Eigen::Index k = std::min(M, N);
  if (kind == EnsembleKind::GaussianIid) {
    d.F = detail::gaussian_matrix(M, N, rng, 1.0 / std::sqrt(double(M)));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(d.F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD of sampled design failed");
    d.U = svd.matrixU();
    d.V = svd.matrixV();
    d.s = svd.singularValues();
    return d;
  }
  if (kind == EnsembleKind::Empirical) throw InvalidInput("cannot sample an empirical ensemble");
  d.U = haar_orthogonal(M, rng);
  d.V = haar_orthogonal(N, rng);
  d.s.resize(k);
  if (kind == EnsembleKind::RowOrthogonal) {
    d.s.setOnes();
  } else {
    double a = double(M) / double(N);
    double lo = (1.0 - a) * (1.0 - a), hi = (1.0 + a) * (1.0 + a);
    std::uniform_real_distribution<double> ud(lo, hi);
    for (Eigen::Index i = 0; i < k; ++i) d.s[i] = ud(rng);
    std::sort(d.s.data(), d.s.data() + k, std::greater<double>());
  }
  d.F = d.U.leftCols(k) * d.s.asDiagonal() * d.V.leftCols(k).transpose();
  return d;
}

enum class TeacherKind { Sign, LinearGaussian };

inline std::string to_string(TeacherKind k) { return k == TeacherKind::Sign ? "sign" : "linear_gaussian"; }

inline TeacherKind teacher_kind_from_string(const std::string& s) {
  if (s == "sign") return TeacherKind::Sign;
  if (s == "linear_gaussian" || s == "linear") return TeacherKind::LinearGaussian;
  throw InvalidInput("unknown teacher '" + s + "'");
}

/** @brief Gauss-Bernoulli prior: x0_i = 0 w.p. 1 - rho, N(0, sigma^2) otherwise. */
struct PriorSpec {
  double rho = 1.0;
  double sigma = 1.0;
  double rho_x() const { return rho * sigma * sigma; }
};

struct TeacherSpec {
  TeacherKind kind = TeacherKind::Sign;
  double delta0 = 0.0;
  PriorSpec prior;
};

struct TeacherSample {
  Eigen::VectorXd x0, z0, y;
};

inline double sign_label(double z) { return z >= 0.0 ? 1.0 : -1.0; }

inline TeacherSample sample_teacher(const TeacherSpec& t, const DesignMatrix& d, std::uint64_t seed) {
  require(t.prior.rho > 0.0 && t.prior.rho <= 1.0, "rho must lie in (0, 1]");
  require(t.prior.sigma > 0.0, "sigma must be positive");
  require(t.delta0 >= 0.0, "delta0 must be non-negative");
  std::mt19937_64 rng(splitmix64(seed ^ 0x7e11c0de5eedULL));
  std::bernoulli_distribution bern(t.prior.rho);
  std::normal_distribution<double> nd(0.0, 1.0);
  TeacherSample s;
  s.x0.resize(d.N());
  for (Eigen::Index i = 0; i < d.N(); ++i) {
    bool on = bern(rng);
    double g = nd(rng);
    s.x0[i] = on ? t.prior.sigma * g : 0.0;
  }
  s.z0 = d.F * s.x0;
  s.y.resize(d.M());
  for (Eigen::Index i = 0; i < d.M(); ++i) {
    double w = nd(rng);
    s.y[i] = t.kind == TeacherKind::Sign ? sign_label(s.z0[i]) : s.z0[i] + std::sqrt(t.delta0) * w;
  }
  return s;
}

}  // namespace glmrot

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "glmrot/ensembles.hpp"
#include "glmrot/quadrature.hpp"

using namespace glmrot;

TEST(Quadrature, HermiteMoments) {
  const auto& r = gauss_hermite(40);
  double m0 = 0, m2 = 0, m4 = 0, m6 = 0, m3 = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    double x = r.nodes[i], w = r.weights[i];
    m0 += w;
    m2 += w * x * x;
    m3 += w * x * x * x;
    m4 += w * std::pow(x, 4);
    m6 += w * std::pow(x, 6);
  }
  EXPECT_NEAR(m0, 1.0, 1e-13);
  EXPECT_NEAR(m2, 1.0, 1e-12);
  EXPECT_NEAR(m3, 0.0, 1e-12);
  EXPECT_NEAR(m4, 3.0, 1e-11);
  EXPECT_NEAR(m6, 15.0, 1e-10);
  EXPECT_NEAR(gauss_hermite_expectation([](double x) { return std::cos(x); }, 40), std::exp(-0.5), 1e-13);
}

TEST(Quadrature, LegendreIntegratesPolynomials) {
  const auto& r = gauss_legendre(12);
  double s0 = 0, s2 = 0, s22 = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    s0 += r.weights[i];
    s2 += r.weights[i] * r.nodes[i] * r.nodes[i];
    s22 += r.weights[i] * std::pow(r.nodes[i], 22);
  }
  EXPECT_NEAR(s0, 2.0, 1e-14);
  EXPECT_NEAR(s2, 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(s22, 2.0 / 23.0, 1e-13);
}

TEST(Quadrature, PiecewiseHandlesKinks) {
  // E|X| = sqrt(2/pi) sd, E[(|X| - 1)_+] for sd = 2
  double e = gaussian_piecewise_expectation([](double x) { return std::abs(x); }, 2.0, {0.0});
  EXPECT_NEAR(e, 2.0 * std::sqrt(2.0 / M_PI), 1e-12);
  double sd = 2.0, l = 1.0;
  double exact = sd * std::sqrt(2.0 / M_PI) * std::exp(-l * l / (2 * sd * sd)) - l * std::erfc(l / (sd * std::sqrt(2.0)));
  double got = gaussian_piecewise_expectation([&](double x) { return std::max(std::abs(x) - l, 0.0); }, sd, {-l, l});
  EXPECT_NEAR(got, exact, 1e-12);
}

TEST(Spectra, TotalMassIsOne) {
  for (auto k : {EnsembleKind::GaussianIid, EnsembleKind::RowOrthogonal, EnsembleKind::SquaredUniform})
    for (double a : {0.2, 0.5, 1.0, 1.7, 3.0}) {
      auto sd = spectral_density(k, a);
      EXPECT_NEAR(sd.expect([](double) { return 1.0; }), 1.0, 1e-12) << to_string(k) << " alpha=" << a;
    }
}

TEST(Spectra, MarchenkoPasturMoments) {
  // entries of variance 1/M: E[lambda] = 1, E[lambda^2] = 1 + 1/alpha over the N eigenvalues of F^T F
  for (double a : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    auto sd = spectral_density(EnsembleKind::GaussianIid, a);
    EXPECT_NEAR(sd.mean(), 1.0, 1e-10) << a;
    EXPECT_NEAR(sd.expect([](double l) { return l * l; }), 1.0 + 1.0 / a, 1e-10) << a;
    EXPECT_NEAR(sd.cdf(sd.lambda_max() + 1.0), 1.0, 1e-10);
  }
  auto sd = spectral_density(EnsembleKind::GaussianIid, 0.5);
  EXPECT_NEAR(sd.cdf(0.0), 0.5, 1e-12);
  EXPECT_NEAR(sd.lambda_max(), std::pow(1 + std::sqrt(2.0), 2), 1e-12);
}

TEST(Spectra, RowOrthogonalAtoms) {
  auto h = spectral_density(EnsembleKind::RowOrthogonal, 0.5);
  ASSERT_EQ(h.atom_values.size(), 2u);
  EXPECT_DOUBLE_EQ(h.atom_values[0], 0.0);
  EXPECT_DOUBLE_EQ(h.atom_weights[0], 0.5);
  EXPECT_DOUBLE_EQ(h.atom_values[1], 1.0);
  EXPECT_DOUBLE_EQ(h.atom_weights[1], 0.5);
  auto g = spectral_density(EnsembleKind::RowOrthogonal, 2.0);
  ASSERT_EQ(g.atom_values.size(), 1u);
  EXPECT_DOUBLE_EQ(g.atom_weights[0], 1.0);
  EXPECT_THROW(spectral_density(EnsembleKind::RowOrthogonal, 0.0), InvalidInput);
}

TEST(Spectra, SquaredUniformMatchesMonteCarlo) {
  auto sd = spectral_density(EnsembleKind::SquaredUniform, 0.5);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.25, 2.25);
  double acc = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    double s = u(rng);
    acc += s * s;
  }
  // half the eigenvalues of F^T F are zero at alpha = 0.5
  double mc = 0.5 * acc / n;
  EXPECT_NEAR(sd.mean() / mc, 1.0, 5e-3);
  auto one = spectral_density(EnsembleKind::SquaredUniform, 1.0);
  EXPECT_NEAR(std::sqrt(one.support_lo), 0.0, 1e-15);
  EXPECT_NEAR(std::sqrt(one.support_hi), 4.0, 1e-15);
}

TEST(Spectra, GaussianSampleKolmogorovSmirnov) {
  auto d = sample_design(EnsembleKind::GaussianIid, 1000, 1000, 17);
  Eigen::VectorXd l = d.lambda_right();
  std::vector<double> v(l.data(), l.data() + l.size());
  std::sort(v.begin(), v.end());
  auto sd = spectral_density(EnsembleKind::GaussianIid, 1.0);
  double ks = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double F = sd.cdf(v[i]);
    ks = std::max({ks, std::abs(F - double(i + 1) / v.size()), std::abs(F - double(i) / v.size())});
  }
  EXPECT_LE(ks, 0.05);
}

TEST(Spectra, RowOrthogonalDesignIsCoIsometry) {
  auto d = sample_design(EnsembleKind::RowOrthogonal, 50, 100, 4);
  EXPECT_LE((d.F * d.F.transpose() - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff(), 1e-10);
  auto u = sample_design(EnsembleKind::SquaredUniform, 60, 80, 4);
  EXPECT_LE((u.U.transpose() * u.U - Eigen::MatrixXd::Identity(60, 60)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GE(u.s.minCoeff(), std::pow(1 - 0.75, 2) - 1e-15);
  EXPECT_LE(u.s.maxCoeff(), std::pow(1 + 0.75, 2) + 1e-15);
}

TEST(Spectra, SamplingIsDeterministic) {
  auto a = sample_design(EnsembleKind::SquaredUniform, 30, 40, 99);
  auto b = sample_design(EnsembleKind::SquaredUniform, 30, 40, 99);
  auto c = sample_design(EnsembleKind::SquaredUniform, 30, 40, 100);
  EXPECT_EQ((a.F - b.F).norm(), 0.0);
  EXPECT_GT((a.F - c.F).norm(), 0.0);
  TeacherSpec t;
  t.prior.rho = 0.3;
  auto ta = sample_teacher(t, a, 5), tb = sample_teacher(t, a, 5);
  EXPECT_EQ((ta.y - tb.y).norm(), 0.0);
  for (Eigen::Index i = 0; i < ta.y.size(); ++i) EXPECT_EQ(ta.y[i], ta.z0[i] >= 0 ? 1.0 : -1.0);
}

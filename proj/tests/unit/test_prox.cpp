#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "glmrot/prox.hpp"

using namespace glmrot;

namespace {

std::vector<ScalarFunctionSpec> all_kinds() {
  return {square_loss(),         square_loss(0.3),       logistic_loss(),      logistic_loss(0.2),
          hinge_loss(),          hinge_loss(0.1),        elastic_net(0.5, 0.2), pure_l1(0.7),
          pure_l2(1.5),          elastic_net(0.0, 0.0)};
}

// generic minimiser by golden section on a wide bracket, used as an oracle
double brute_prox(const ScalarFunctionSpec& s, double p, double g) {
  auto obj = [&](double x) { return value(s, x) + (x - p) * (x - p) / (2 * g); };
  double lo = p - 50, hi = p + 50;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 400; ++i) {
    double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
    if (obj(a) < obj(b)) hi = b; else lo = a;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Prox, LogisticAtOriginSolvesFixedPoint) {
  // x = 1 / (1 + e^x), root 0.40105813754154703565...
  EXPECT_NEAR(prox(logistic_loss().with_label(1.0), 0.0, 1.0), 0.40105813754154704, 1e-12);
  // x = 2 + 0.5 / (1 + e^x)
  EXPECT_NEAR(prox(logistic_loss().with_label(1.0), 2.0, 0.5), 2.0566891132739080, 1e-12);
  // label symmetry
  EXPECT_NEAR(prox(logistic_loss().with_label(-1.0), 0.0, 1.0), -0.40105813754154704, 1e-12);
}

TEST(Prox, ClosedForms) {
  EXPECT_NEAR(prox(square_loss().with_label(2.0), 1.0, 0.5), (1.0 + 0.5 * 2.0) / 1.5, 1e-15);
  auto h = hinge_loss().with_label(1.0);
  EXPECT_DOUBLE_EQ(prox(h, 1.7, 0.5), 1.7);
  EXPECT_DOUBLE_EQ(prox(h, 0.2, 0.5), 0.7);
  EXPECT_DOUBLE_EQ(prox(h, 0.8, 0.5), 1.0);
  auto en = elastic_net(0.4, 0.5);
  EXPECT_NEAR(prox(en, 2.0, 0.5), (2.0 - 0.2) / 1.25, 1e-15);
  EXPECT_EQ(prox(en, 0.15, 0.5), 0.0);
  EXPECT_NEAR(prox(en, -1.0, 2.0), (-1.0 + 0.8) / 2.0, 1e-15);
}

TEST(Prox, MatchesGenericMinimiser) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::uniform_real_distribution<double> ug(0.05, 5.0);
  for (const auto& base : all_kinds())
    for (int k = 0; k < 50; ++k) {
      auto s = base.is_loss() ? base.with_label(k % 2 ? 1.0 : -1.0) : base;
      double p = nd(rng), g = ug(rng);
      EXPECT_NEAR(prox(s, p, g), brute_prox(s, p, g), 1e-6) << to_string(s.kind) << " p=" << p << " g=" << g;
    }
}

TEST(Prox, RidgeComposition) {
  // prox_{g(f + l x^2/2)}(p) = prox_{g/(1+g l) f}(p/(1+g l))
  const double l = 0.7;
  for (double p : {-2.0, -0.3, 0.0, 0.4, 3.0})
    for (double g : {0.1, 1.0, 4.0}) {
      double c = 1.0 + g * l;
      EXPECT_NEAR(prox(elastic_net(0.3, l), p, g), prox(pure_l1(0.3), p / c, g / c), 1e-14);
      EXPECT_NEAR(prox(logistic_loss(l).with_label(1.0), p, g), prox(logistic_loss().with_label(1.0), p / c, g / c),
                  1e-11);
    }
}

TEST(Prox, FirmlyNonexpansiveOnRandomTriples) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::uniform_real_distribution<double> ug(0.01, 10.0);
  auto kinds = all_kinds();
  for (int k = 0; k < 10000; ++k) {
    auto s = kinds[k % kinds.size()];
    if (s.is_loss()) s = s.with_label(k % 3 ? 1.0 : -1.0);
    double a = nd(rng), b = nd(rng), g = ug(rng);
    double pa = prox(s, a, g), pb = prox(s, b, g);
    EXPECT_GE((pa - pb) * (a - b) + 1e-10, (pa - pb) * (pa - pb)) << to_string(s.kind);
  }
}

TEST(Prox, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::uniform_real_distribution<double> ug(0.1, 3.0);
  const double h = 1e-6;
  for (const auto& base : all_kinds())
    for (int k = 0; k < 200; ++k) {
      auto s = base.is_loss() ? base.with_label(1.0) : base;
      double p = nd(rng), g = ug(rng);
      double fd = (prox(s, p + h, g) - prox(s, p - h, g)) / (2 * h);
      double d = prox_derivative(s, p, g);
      // central differences straddling a kink average the two sides
      double fl = (prox(s, p, g) - prox(s, p - h, g)) / h, fr = (prox(s, p + h, g) - prox(s, p, g)) / h;
      if (std::abs(fl - fr) > 1e-4) continue;
      EXPECT_NEAR(d, fd, 1e-5) << to_string(s.kind) << " p=" << p;
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 1.0 + 1e-12);
    }
}

TEST(Prox, MoreauEnvelopeGradient) {
  // d/dp M(p) = (p - prox(p)) / g
  for (const auto& base : all_kinds()) {
    auto s = base.is_loss() ? base.with_label(-1.0) : base;
    for (double p : {-1.3, 0.2, 2.5}) {
      double g = 0.8, h = 1e-6;
      double fd = (moreau_envelope(s, p + h, g) - moreau_envelope(s, p - h, g)) / (2 * h);
      EXPECT_NEAR(fd, (p - prox(s, p, g)) / g, 1e-6) << to_string(s.kind);
    }
  }
}

TEST(Prox, CurvatureConstants) {
  EXPECT_DOUBLE_EQ(strong_convexity(square_loss(0.2)), 1.2);
  EXPECT_DOUBLE_EQ(strong_convexity(logistic_loss()), 0.0);
  EXPECT_DOUBLE_EQ(smoothness(logistic_loss(0.1).with_label(1.0)), 0.35);
  EXPECT_TRUE(std::isinf(smoothness(hinge_loss())));
  EXPECT_TRUE(std::isinf(smoothness(elastic_net(0.1, 0.2))));
  EXPECT_DOUBLE_EQ(smoothness(pure_l2(0.2)), 0.2);
}

TEST(Prox, RejectsBadScale) {
  EXPECT_THROW(prox(square_loss().with_label(1.0), 0.0, 0.0), InvalidInput);
  EXPECT_THROW(prox(square_loss().with_label(1.0), 0.0, -1.0), InvalidInput);
  EXPECT_THROW(prox(pure_l1(1.0), NAN, 1.0), InvalidInput);
}

TEST(Prox, KindNamesRoundTrip) {
  for (auto k : {FunctionKind::Square, FunctionKind::Logistic, FunctionKind::Hinge, FunctionKind::ElasticNet,
                 FunctionKind::PureL1, FunctionKind::PureL2})
    EXPECT_EQ(function_kind_from_string(to_string(k)), k);
  EXPECT_THROW(function_kind_from_string("cauchy"), InvalidInput);
}

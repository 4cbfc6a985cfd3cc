#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "generators.hpp"
#include "nsf/constitutive.hpp"

using namespace nsf;

namespace {

ModelParams model(double gamma, double m, double l) {
  ModelParams p;
  p.gamma = gamma;
  p.m = m;
  p.l = l;
  return p;
}

// Densities straddling both ends of the transition band.
std::vector<double> straddle(double k) {
  std::vector<double> r;
  for (double base : {0.5, 0.5 * k, k - 0.3, k - 1e-3, k + 0.1, k + 0.5, k + 0.9, k + 1.0 - 1e-3, k + 1.2, k + 3.0})
    r.push_back(base);
  return r;
}

}  // namespace

TEST(Truncation, AnchorValues) {
  const TruncationK K(10.0);
  EXPECT_EQ(K(5.0), 1.0);
  EXPECT_EQ(K(11.5), 0.0);
  EXPECT_DOUBLE_EQ(K(10.5), 0.5);
  EXPECT_LT(K.K_prime(10.5), 0.0);
  EXPECT_EQ(K.K_prime(3.0), 0.0);
  EXPECT_EQ(K.K_prime(12.0), 0.0);
}

TEST(Truncation, RejectsNegativeArguments) {
  const TruncationK K(4.0);
  EXPECT_THROW(K(-1e-9), std::domain_error);
  EXPECT_THROW(K.K_prime(-1.0), std::domain_error);
  EXPECT_THROW(K.int_K(-1.0), std::domain_error);
  EXPECT_THROW(TruncationK(0.0), std::invalid_argument);
}

TEST(Truncation, IntegralAnchors) {
  const TruncationK K(10.0);
  EXPECT_EQ(K.int_K(2.0), 2.0);
  EXPECT_EQ(K.int_K(0.0), 0.0);
  EXPECT_DOUBLE_EQ(K.int_K(12.0), K.int_K(11.0));
  EXPECT_DOUBLE_EQ(K.int_K(11.0), 10.5);
}

TEST(Truncation, SecondDerivativeIsContinuousAtBandEnds) {
  // C^2 matching: the one-sided second differences agree at k and k+1.
  // Both vanish at the ends, so each is O(d).
  const TruncationK K(6.0);
  const double d = 1e-6;
  for (double x : {6.0, 7.0}) {
    const double left = (K.K_prime(x) - K.K_prime(x - d)) / d;
    const double right = (K.K_prime(x + d) - K.K_prime(x)) / d;
    EXPECT_NEAR(left, right, 1e-4) << x;
    EXPECT_NEAR(K.K_prime(x), 0.0, 1e-14);
  }
}

TEST(Truncation, DerivativesMatchFiniteDifferences) {
  proptest::Gen gen(31);
  for (int n = 0; n < 20; ++n) {
    const TruncationK K(gen.uniform(2.0, 30.0));
    for (double r : straddle(K.k())) {
      const double d = 1e-6 * std::max(1.0, r);
      const double fd_k = (K(r + d) - K(r - d)) / (2 * d);
      const double fd_i = (K.int_K(r + d) - K.int_K(r - d)) / (2 * d);
      EXPECT_NEAR(fd_i, K(r), 1e-6 * std::max(1.0, K(r))) << r;
      EXPECT_NEAR(fd_k, K.K_prime(r), 1e-6 * std::max(1.0, std::abs(K.K_prime(r)))) << r;
    }
  }
}

TEST(Pressure, ReducesToPowerLawBelowThreshold) {
  const Constitutive c(model(5.0, 2.0, 1.0), TruncationK(10.0));
  EXPECT_DOUBLE_EQ(c.P_b(2.0), 32.0);
  EXPECT_DOUBLE_EQ(c.P(2.0, 3.0), 38.0);
  EXPECT_EQ(c.P(0.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(c.P_b(11.0), c.P_b(15.0));
}

TEST(Pressure, PowerLawIdentityForRandomParameters) {
  proptest::Gen gen(32);
  for (int n = 0; n < 200; ++n) {
    const double gamma = gen.uniform(3.01, 8.0), k = gen.uniform(2.0, 20.0);
    const Constitutive c(model(gamma, 2.5, 1.5), TruncationK(k));
    const double rho = gen.uniform(0.0, k), theta = gen.log_uniform(1e-2, 1e2);
    const double expected = std::pow(rho, gamma) + rho * theta;
    EXPECT_NEAR(c.P(rho, theta), expected, 1e-12 * expected);
  }
}

TEST(Pressure, BarotropicPartIsMonotone) {
  proptest::Gen gen(33);
  for (int n = 0; n < 20; ++n) {
    const double k = gen.uniform(2.0, 15.0);
    const Constitutive c(model(gen.uniform(3.1, 6.0), 2.5, 1.5), TruncationK(k));
    double prev = -1.0;
    for (int i = 0; i <= 400; ++i) {
      const double r = (k + 2.0) * i / 400.0, p = c.P_b(r);
      if (r < k + 1.0)
        EXPECT_GT(p, prev) << r;
      else
        EXPECT_GE(p, prev) << r;
      prev = p;
    }
  }
}

TEST(Pressure, DerivativeMatchesFiniteDifferences) {
  proptest::Gen gen(34);
  for (int n = 0; n < 10; ++n) {
    const double gamma = gen.uniform(3.1, 6.0);
    const TruncationK K(gen.uniform(2.0, 12.0));
    const Constitutive c(model(gamma, 2.5, 1.5), K);
    for (double r : straddle(K.k())) {
      const double d = 1e-6 * r;
      const double fd = (c.P_b(r + d) - c.P_b(r - d)) / (2 * d);
      // Relative to the untruncated slope: near k+1 the derivative itself
      // vanishes while the difference quotient keeps round-off of P_b.
      const double scale = gamma * std::pow(r, gamma - 1.0);
      EXPECT_NEAR(fd, scale * K(r), 1e-6 * scale) << r;
      const double theta = gen.uniform(0.5, 3.0);
      const double fdp = (c.P(r + d, theta) - c.P(r - d, theta)) / (2 * d);
      EXPECT_NEAR(fdp, c.dP_drho(r, theta), 1e-6 * (scale + theta)) << r;
    }
  }
}

TEST(Pressure, BandIntegralMatchesAdaptiveQuadrature) {
  proptest::Gen gen(36);
  for (int n = 0; n < 20; ++n) {
    const double gamma = gen.uniform(3.1, 7.0);
    const TruncationK K(gen.uniform(2.0, 12.0));
    const Constitutive c(model(gamma, 2.5, 1.5), K);
    const double r = K.k() + gen.uniform(0.0, 1.5);
    auto integrand = [&](double t) { return gamma * std::pow(t, gamma - 1.0) * K(t); };
    // Split at the band ends so the oracle never integrates across a kink.
    double q = std::pow(K.k(), gamma);
    q += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, K.k(), std::min(r, K.k() + 1.0), 15,
                                                                        1e-15);
    EXPECT_NEAR(c.P_b(r), q, 1e-12 * q) << r;
  }
}

TEST(Coefficients, ConductivityAndBoundaryTransfer) {
  EXPECT_DOUBLE_EQ(Constitutive(model(4.0, 2.5, 1.5), TruncationK(10)).kappa(1.0), 2.0);
  EXPECT_DOUBLE_EQ(Constitutive(model(4.0, 2.0, 1.0), TruncationK(10)).kappa(3.0), 10.0);
  EXPECT_DOUBLE_EQ(Constitutive(model(4.0, 2.0, 1.0), TruncationK(10)).L_coef(4.0), 5.0);
  EXPECT_THROW(Constitutive(model(4.0, 2.0, 1.0), TruncationK(10)).kappa(0.0), std::domain_error);
}

TEST(Kirchhoff, Anchors) {
  const Kirchhoff phi(0.1, 2.0);
  EXPECT_EQ(phi.Phi(0.0), 0.0);
  EXPECT_DOUBLE_EQ(phi.Phi_prime(0.0), 2.0 * 1.1);
}

TEST(Kirchhoff, MatchesAdaptiveQuadrature) {
  const double eps = 0.1, m = 2.0;
  const Kirchhoff phi(eps, m);
  auto integrand = [&](double t) { return (1.0 + std::exp(m * t)) * (eps + std::exp(t)); };
  double err = 0.0;
  const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, 1e-15, &err);
  EXPECT_NEAR(phi.Phi(1.0), q, 1e-12);
  const double qn = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, -1.5, 15, 1e-15);
  EXPECT_NEAR(phi.Phi(-1.5), qn, 1e-12);
}

TEST(Kirchhoff, StrictlyIncreasingWithMatchingForms) {
  proptest::Gen gen(35);
  for (int n = 0; n < 50; ++n) {
    const double eps = gen.log_uniform(1e-4, 1.0), m = gen.uniform(1.0, 5.0);
    const Kirchhoff phi(eps, m, gen.uniform(0.5, 2.0));
    double prev = -INFINITY;
    for (int i = 0; i <= 100; ++i) {
      const double z = -5.0 + 10.0 * i / 100.0;
      EXPECT_GT(phi.Phi(z), prev);
      prev = phi.Phi(z);
      const double theta = std::exp(z);
      const double via_theta = phi.Phi_prime(z) / theta;
      EXPECT_NEAR(phi.theta_form(z), via_theta, 1e-12 * via_theta);
      const double d = 1e-6;
      EXPECT_NEAR((phi.Phi(z + d) - phi.Phi(z - d)) / (2 * d), phi.Phi_prime(z), 1e-6 * phi.Phi_prime(z));
      EXPECT_NEAR((phi.Phi_prime(z + d) - phi.Phi_prime(z - d)) / (2 * d), phi.Phi_second(z),
                  1e-6 * std::max(1.0, std::abs(phi.Phi_second(z))));
    }
  }
}

TEST(Kirchhoff, OverflowIsFlaggedBeyondCap) {
  const Kirchhoff phi(0.01, 2.5);
  EXPECT_DOUBLE_EQ(phi.cap(), 20.0);
  EXPECT_NO_THROW(phi.Phi(19.9));
  EXPECT_THROW(phi.Phi(20.1), PhiOverflow);
  EXPECT_THROW(phi.Phi_prime(-20.1), PhiOverflow);
  const Kirchhoff tight(0.01, 2.5, 1.0, 3.0);
  EXPECT_THROW(tight.Phi(3.5), PhiOverflow);
}

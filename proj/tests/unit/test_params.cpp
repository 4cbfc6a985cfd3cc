#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "generators.hpp"
#include "nsf/params.hpp"

using namespace nsf;

namespace {

ModelParams base(double gamma, double m, double l) {
  ModelParams p;
  p.gamma = gamma;
  p.m = m;
  p.l = l;
  p.mu = 1.0;
  p.lambda = 0.0;
  p.f = 0.1;
  p.M = 1.0;
  return p;
}

const Condition* find(const ValidationReport& r, const std::string& name) {
  for (const Condition& c : r.conditions)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

TEST(Threshold, GammaFourGivesElevenFifths) { EXPECT_EQ(threshold_m(4.0), 11.0 / 5.0); }

TEST(Threshold, GammaTenGivesTwentyNineOverTwentyThree) { EXPECT_DOUBLE_EQ(threshold_m(10.0), 29.0 / 23.0); }

// The closed form is decreasing in gamma with value 4 at gamma = 3, so near
// 3 the requirement on m tends to 4 (from below).
TEST(Threshold, TendsToFourAsGammaApproachesThree) {
  for (double d : {1e-1, 1e-3, 1e-6}) {
    EXPECT_LT(threshold_m(3.0 + d), 4.0) << d;
    EXPECT_NEAR(threshold_m(3.0 + d), 4.0, 10.0 * d) << d;
  }
  EXPECT_GT(threshold_m(3.0 - 1e-3), 4.0);
}

TEST(Threshold, DomainErrorAtOrBelowSevenThirds) {
  EXPECT_THROW(threshold_m(7.0 / 3.0), std::domain_error);
  EXPECT_THROW(threshold_m(2.0), std::domain_error);
}

TEST(Threshold, DecreasingInGamma) {
  proptest::Gen gen(11);
  for (int n = 0; n < 200; ++n) {
    const double a = gen.uniform(2.4, 20.0), b = a + gen.uniform(1e-3, 5.0);
    EXPECT_GT(threshold_m(a), threshold_m(b));
  }
}

TEST(Validate, ReferenceParametersAreValid) {
  const ValidationReport r = validate_params(base(4.0, 2.3, 1.3));
  EXPECT_TRUE(r.valid) << r.summary();
  const Condition* c = find(r, "m > (3 gamma - 1)/(3 gamma - 7)");
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->threshold, 11.0 / 5.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Validate, GammaThreeIsRejected) {
  const ValidationReport r = validate_params(base(3.0, 10.0, 9.0));
  EXPECT_FALSE(r.valid);
  EXPECT_FALSE(r.admissible(ValidationMode::Strict));
  const Condition* c = find(r, "gamma > 3");
  ASSERT_NE(c, nullptr);
  EXPECT_FALSE(c->satisfied);
  EXPECT_TRUE(c->theorem_class);
}

TEST(Validate, MAtThresholdIsNotStrict) {
  const ValidationReport r = validate_params(base(4.0, 2.2, 1.2));
  EXPECT_FALSE(r.admissible(ValidationMode::Strict));
  ASSERT_EQ(r.violations().size(), 1u);
  EXPECT_EQ(r.violations()[0].quantity, "m");
}

TEST(Validate, NegativeBulkViscosityIsRejectedInEveryMode) {
  ModelParams p = base(4.0, 2.5, 1.5);
  p.lambda = -1.0;
  const ValidationReport r = validate_params(p);
  const Condition* c = find(r, "lambda + 2 mu/3 > 0");
  ASSERT_NE(c, nullptr);
  EXPECT_DOUBLE_EQ(c->value, -1.0 / 3.0);
  EXPECT_FALSE(c->satisfied);
  EXPECT_FALSE(r.admissible(ValidationMode::Strict));
  EXPECT_FALSE(r.admissible(ValidationMode::Exploratory));
}

TEST(Validate, ExploratoryModeDemotesTheoremConditions) {
  const ValidationReport r = validate_params(base(3.0, 2.5, 1.5));
  EXPECT_FALSE(r.admissible(ValidationMode::Strict));
  EXPECT_TRUE(r.admissible(ValidationMode::Exploratory));
}

TEST(Validate, NonFiniteFieldIsNamed) {
  ModelParams p = base(4.0, 2.5, 1.5);
  p.mu = std::numeric_limits<double>::quiet_NaN();
  try {
    validate_params(p);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("'mu'"), std::string::npos) << e.what();
  }
}

TEST(Validate, WarnsWhenLIsNotMMinusOne) {
  const ValidationReport r = validate_params(base(4.0, 2.5, 1.0));
  EXPECT_TRUE(r.valid);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Validate, DoesNotMutateInput) {
  const ModelParams p = base(4.0, 2.5, 1.5);
  ModelParams copy = p;
  (void)validate_params(copy);
  EXPECT_EQ(copy.gamma, p.gamma);
  EXPECT_EQ(copy.m, p.m);
}

TEST(Validate, ValidIsConjunctionOfConditions) {
  proptest::Gen gen(12);
  for (int n = 0; n < 300; ++n) {
    ModelParams p = base(gen.uniform(2.5, 8.0), gen.uniform(0.5, 6.0), 0.0);
    p.l = p.m - 1.0;
    p.lambda = gen.uniform(-1.0, 1.0);
    const ValidationReport r = validate_params(p);
    bool all = true;
    for (const Condition& c : r.conditions) all = all && c.satisfied;
    EXPECT_EQ(r.valid, all);
    const bool expected = p.gamma > 3.0 && p.m > threshold_m(p.gamma) && p.lambda + 2.0 / 3.0 > 0.0;
    EXPECT_EQ(r.valid, expected) << r.summary();
  }
}

TEST(Approx, RejectsMeanDensityAtOrAboveK) {
  ApproxParams ap;
  ap.k = 2.0;
  EXPECT_NO_THROW(validate_approx(ap, 1.0));
  EXPECT_THROW(validate_approx(ap, 2.0), std::invalid_argument);
  ap.epsilon = 0.0;
  EXPECT_THROW(validate_approx(ap, 1.0), std::invalid_argument);
  ap.epsilon = 0.1;
  ap.t = 1.5;
  EXPECT_THROW(validate_approx(ap, 1.0), std::invalid_argument);
}

TEST(Approx, MeanDensityIsMassOverArea) {
  ModelParams p;
  p.M = 3.0;
  EXPECT_DOUBLE_EQ(mean_density(p, Grid(2.0, 0.5, 4, 4)), 3.0);
  EXPECT_DOUBLE_EQ(mean_density(p, Grid(2.0, 3.0, 4, 4)), 0.5);
}

TEST(Presets, FourierForceAndTemperature) {
  const ForceField F = make_force({"fourier1", {{"amplitude", 0.1}, {"wavenumber", 1.0}}}, 1.0, 1.0);
  const Vec2 f = F({0.25, 0.5});
  EXPECT_NEAR(f.x, 0.1, 1e-15);
  EXPECT_NEAR(f.y, 0.1 * std::sin(std::numbers::pi / 4), 1e-15);
  const BoundaryTemperature T =
      make_theta0({"fourier1", {{"mean", 1.0}, {"amplitude", 0.5}, {"wavenumber", 1.0}}}, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(T({0.0, 0.0}), 1.5);
  EXPECT_DOUBLE_EQ(T.lower(), 0.5);
  EXPECT_DOUBLE_EQ(T.upper(), 1.5);
}

TEST(Presets, UnknownNameAndMissingOrExtraKeysAreRejected) {
  EXPECT_THROW(make_force({"vortex", {}}, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(make_force({"constant", {{"x", 1.0}}}, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(make_theta0({"constant", {{"value", 1.0}, {"extra", 2.0}}}, 1.0, 1.0), std::invalid_argument);
}

TEST(Presets, GaussianBumpPeaksAtCentre) {
  const BoundaryTemperature T = make_theta0(
      {"gaussian-bump", {{"base", 1.0}, {"amplitude", 0.3}, {"x0", 0.5}, {"y0", 0.0}, {"width", 0.2}}}, 1.0, 1.0);
  EXPECT_NEAR(T({0.5, 0.0}), 1.3, 1e-14);
  EXPECT_LT(T({0.0, 1.0}), T({0.5, 0.0}));
  EXPECT_GE(T({0.0, 1.0}), T.lower());
}

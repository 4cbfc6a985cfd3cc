#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "nsf/subsolvers.hpp"
#include "nsf/verification.hpp"

using namespace nsf;

namespace {

double field_max(const ScalarField& s) { return max_abs(s.values()); }
double field_max(const VectorField& v) { return std::max(max_abs(v.u.values()), max_abs(v.v.values())); }

ModelParams forced_model() {
  ModelParams mp;
  mp.force = make_force({"fourier1", {{"amplitude", 0.1}, {"wavenumber", 1.0}}}, 1.0, 1.0);
  mp.theta0 = make_theta0({"fourier1", {{"mean", 1.0}, {"amplitude", 0.5}, {"wavenumber", 1.0}}}, 1.0, 1.0);
  return mp;
}

}  // namespace

// ---------------------------------------------------------------------------
// Continuity

TEST(Continuity, ZeroVelocityGivesMeanDensity) {
  const Grid g(1.0, 1.0, 12, 12);
  const ModelParams mp;
  const ApproxParams ap;
  const ContinuityResult r = solve_continuity(g.faces(), mp, ap, TruncationK(ap.k), g, {});
  for (double x : r.rho.values()) EXPECT_NEAR(x, 1.0, 1e-14);
  EXPECT_TRUE(r.trace.converged);
}

TEST(Continuity, MassIdentityAndBoundsOnRandomFields) {
  proptest::Gen gen(41);
  for (int n = 0; n < 20; ++n) {
    const Grid g = gen.grid(6, 20);
    ModelParams mp;
    mp.M = gen.uniform(0.2, 3.0) * g.area();
    ApproxParams ap;
    ap.epsilon = gen.log_uniform(3e-3, 0.3);
    ap.k = gen.uniform(4.0, 20.0);
    const TruncationK K(ap.k);
    SolveOptions opts;
    opts.continuity_method = n % 2 ? ContinuityMethod::Newton : ContinuityMethod::Picard;
    const VectorField v = gen.velocity(g, ap.epsilon * gen.uniform(0.5, 5.0));
    const ContinuityResult r = solve_continuity(v, mp, ap, K, g, opts);
    double lo = 1e300, hi = -1e300, kint = 0.0;
    for (double x : r.rho.values()) lo = std::min(lo, x), hi = std::max(hi, x);
    for (std::size_t c = 0; c < r.rho.size(); ++c) kint += K(std::max(r.rho[c], 0.0)) * g.cell_area();
    EXPECT_GE(lo, -1e-12);
    EXPECT_LE(hi, ap.k + 1.0);
    EXPECT_LE(std::abs(integrate(r.rho, g) - mean_density(mp, g) * kint), 1e-12 * (1.0 + mp.M));
    EXPECT_LE(r.mass_defect, 1e-12 * (1.0 + mp.M));
    EXPECT_LE(integrate(r.rho, g), mp.M + 1e-12);
    EXPECT_DOUBLE_EQ(r.max_excess, hi - ap.k);
  }
}

TEST(Continuity, PicardAndNewtonAgree) {
  proptest::Gen gen(42);
  const Grid g(1.0, 1.0, 16, 16);
  const ModelParams mp;
  const ApproxParams ap;
  const TruncationK K(ap.k);
  const VectorField v = gen.velocity(g, 0.03);
  SolveOptions picard, newton;
  newton.continuity_method = ContinuityMethod::Newton;
  const ScalarField a = solve_continuity(v, mp, ap, K, g, picard).rho;
  const ScalarField b = solve_continuity(v, mp, ap, K, g, newton).rho;
  EXPECT_LT(field_max(a - b), 1e-10);
}

TEST(Continuity, PicardFallsBackToNewtonInTheTruncationBand) {
  // h = 3 close to k = 5 and a compressive flow: the density enters the
  // band where h K' > 1 and lagging K(rho) stops contracting.
  proptest::Gen gen(1);
  const Grid g(1.0, 1.0, 8, 8);
  ModelParams mp;
  mp.M = 3.0;
  ApproxParams ap;
  ap.k = 5.0;
  const TruncationK K(ap.k);
  const VectorField v = gen.velocity(g, 3.0 * ap.epsilon);
  SolveOptions newton;
  newton.continuity_method = ContinuityMethod::Newton;
  const ContinuityResult a = solve_continuity(v, mp, ap, K, g, {});
  const ContinuityResult b = solve_continuity(v, mp, ap, K, g, newton);
  EXPECT_EQ(a.trace.solver, "continuity-picard+newton");
  EXPECT_TRUE(a.trace.converged);
  EXPECT_GT(a.max_excess, 0.0);  // inside the band, not just near it
  EXPECT_LT(field_max(a.rho - b.rho), 1e-10);
  EXPECT_LE(a.mass_defect, 1e-12);
}

TEST(Continuity, SolutionHasSmallDiscreteResidual) {
  proptest::Gen gen(43);
  const Grid g(1.2, 0.8, 18, 14);
  const ModelParams mp;
  ApproxParams ap;
  ap.epsilon = 0.05;
  const TruncationK K(ap.k);
  const VectorField v = gen.velocity(g, 0.1);
  const ContinuityResult r = solve_continuity(v, mp, ap, K, g, {});
  // Residual per unit area relative to eps h.
  EXPECT_LT(field_max(continuity_residual(r.rho, v, mp, ap, K, g)), 1e-9 * ap.epsilon);
}

TEST(Continuity, ManufacturedSolutionConvergesAtFirstOrder) {
  const mms::OrderStudy s = mms::continuity_study({16, 32, 64});
  ASSERT_EQ(s.orders.size(), 2u);
  EXPECT_GE(s.observed_order, 0.9) << s.errors[0] << " " << s.errors[1] << " " << s.errors[2];
}

// ---------------------------------------------------------------------------
// Momentum

TEST(Momentum, HomotopyStartGivesZeroVelocity) {
  proptest::Gen gen(44);
  const Grid g(1.0, 1.0, 10, 10);
  const ModelParams mp = forced_model();
  const TruncationK K(10.0);
  const MomentumResult r =
      solve_momentum(gen.cells(g, 0.5, 2.0), gen.cells(g, -0.3, 0.3), gen.velocity(g, 1.0), 0.0, mp, K, g, {});
  EXPECT_EQ(field_max(r.w), 0.0);
}

TEST(Momentum, UniformStateWithoutForceGivesZeroVelocity) {
  const Grid g(1.0, 1.0, 10, 10);
  const ModelParams mp;
  const TruncationK K(10.0);
  const MomentumResult r = solve_momentum(g.cells(1.3), g.cells(0.2), g.faces(), 1.0, mp, K, g, {});
  EXPECT_LT(field_max(r.w), 1e-13);
}

TEST(Momentum, SolutionSatisfiesResidualContract) {
  proptest::Gen gen(45);
  const Grid g(1.0, 1.5, 12, 14);
  const ModelParams mp = forced_model();
  const TruncationK K(10.0);
  const ScalarField rho = gen.cells(g, 0.8, 1.2), s = gen.cells(g, -0.1, 0.1);
  const VectorField v_old = gen.velocity(g, 0.2);
  const MomentumResult r = solve_momentum(rho, s, v_old, 0.7, mp, K, g, {});
  EXPECT_LT(field_max(momentum_residual(r.w, rho, s, v_old, 0.7, mp, K, g)), 1e-9);
  EXPECT_EQ(max_abs(normal_trace(r.w, g).values), 0.0);
}

TEST(Momentum, LameOperatorIsPositive) {
  proptest::Gen gen(46);
  for (int n = 0; n < 20; ++n) {
    const Grid g = gen.grid(4, 12);
    ModelParams mp;
    mp.mu = gen.uniform(0.2, 2.0);
    mp.lambda = gen.uniform(-0.6 * mp.mu, 1.0);
    mp.f = gen.uniform(0.0, 1.0);
    const VectorField w = gen.noisy_velocity(g, 1.0);
    EXPECT_GT(inner(lame_apply(w, mp, g), w, g), 0.0);
  }
}

TEST(Momentum, ManufacturedSolutionConvergesAtSecondOrder) {
  const mms::OrderStudy s = mms::momentum_study({16, 32, 64});
  EXPECT_GE(s.observed_order, 1.9);
}

// ---------------------------------------------------------------------------
// Entropy

TEST(Entropy, HomotopyStartGivesZeroEntropy) {
  proptest::Gen gen(47);
  const Grid g(1.0, 1.0, 10, 10);
  const ModelParams mp = forced_model();
  const ApproxParams ap;
  const TruncationK K(ap.k);
  const EntropyResult r =
      solve_entropy(gen.cells(g, 0.5, 2.0), gen.velocity(g, 0.5), gen.cells(g, -0.3, 0.3), 0.0, mp, ap, K, g, {});
  EXPECT_LT(field_max(r.s), 1e-14);
  EXPECT_LT(max_abs(r.s_boundary.values), 1e-14);
}

TEST(Entropy, RestInputsGiveZeroEntropy) {
  const Grid g(1.0, 1.0, 10, 10);
  const ModelParams mp;
  const ApproxParams ap;
  const EntropyResult r = solve_entropy(g.cells(1.0), g.faces(), g.cells(), 1.0, mp, ap, TruncationK(ap.k), g, {});
  EXPECT_LT(field_max(r.s), 1e-14);
}

TEST(Entropy, SolutionSatisfiesResidualContract) {
  proptest::Gen gen(48);
  const Grid g(1.0, 1.0, 12, 12);
  const ModelParams mp = forced_model();
  const ApproxParams ap;
  const TruncationK K(ap.k);
  const ScalarField rho = gen.cells(g, 0.9, 1.1), s_old = gen.cells(g, -0.05, 0.05);
  const VectorField v = gen.velocity(g, 0.05);
  const EntropyResult r = solve_entropy(rho, v, s_old, 1.0, mp, ap, K, g, {});
  const EntropyResidual res = entropy_residual(r.s, r.s_boundary, rho, v, s_old, 1.0, mp, ap, K, g);
  EXPECT_LT(field_max(res.cells), 1e-9);
  EXPECT_LT(max_abs(res.walls.values), 1e-9);
  // The temperature is positive by construction.
  const ScalarField theta = State{rho, v, r.s, r.s_boundary}.theta();
  for (double th : theta.values()) EXPECT_GT(th, 0.0);
}

TEST(Entropy, ManufacturedSolutionConvergesAtSecondOrder) {
  const mms::OrderStudy s = mms::entropy_study({16, 32, 64});
  EXPECT_GE(s.observed_order, 1.9);
}

// ---------------------------------------------------------------------------
// Joint mechanics solve and helpers

TEST(Mechanics, MatchesSeparateSolvesAtTheFixedPoint) {
  // The joint solve returns (rho, w) with rho = S(w) and w the Lame solve at rho.
  const Grid g(1.0, 1.0, 12, 12);
  const ModelParams mp = forced_model();
  const ApproxParams ap;
  const TruncationK K(ap.k);
  const ScalarField s = g.cells(0.05);
  const MechanicsResult m = solve_mechanics(g.cells(1.0), s, g.faces(), 1.0, mp, ap, K, g, {});
  const ScalarField rho = solve_continuity(m.w, mp, ap, K, g, {}).rho;
  EXPECT_LT(field_max(rho - m.rho), 1e-10);
  // Convection is lagged at v_old = 0 here, so the momentum solve sees the same data.
  const MomentumResult w = solve_momentum(m.rho, s, g.faces(), 1.0, mp, K, g, {});
  EXPECT_LT(field_max(w.w - m.w), 1e-10);
  EXPECT_LE(m.mass_defect, 1e-12);
}

TEST(Mechanics, RejectsNonpositiveViscosity) {
  const Grid g(1.0, 1.0, 6, 6);
  ModelParams mp;
  mp.mu = 0.0;
  const ApproxParams ap;
  EXPECT_THROW(solve_mechanics(g.cells(1.0), g.cells(), g.faces(), 1.0, mp, ap, TruncationK(ap.k), g, {}),
               SolverError);
}

TEST(Helpers, AdvectiveDerivativeOfConstantVanishes) {
  proptest::Gen gen(49);
  const Grid g(1.0, 1.0, 9, 7);
  EXPECT_LT(field_max(advective_derivative(gen.noisy_velocity(g, 1.0), g.cells(2.5), g)), 1e-14);
}

TEST(Helpers, ConvectionOfRestIsZero) {
  const Grid g(1.0, 1.0, 9, 7);
  EXPECT_EQ(field_max(convection(g.faces(), g.cells(1.0), g, WallClosure::slip(1.0, 0.1))), 0.0);
}

TEST(Helpers, CoupledResidualsVanishOnRestState) {
  const Grid g(1.0, 1.0, 8, 8);
  const ModelParams mp;
  const ApproxParams ap;
  const CoupledResiduals r = coupled_residuals(rest_state(g, 1.0), 1.0, mp, ap, TruncationK(ap.k), g);
  EXPECT_LT(r.max(), 1e-14);
}

TEST(Options, ValidationRejectsBadTolerances) {
  SolveOptions o;
  o.newton_tol = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = {};
  o.picard_damping = 1.5;
  EXPECT_THROW(o.validate(), std::invalid_argument);
}

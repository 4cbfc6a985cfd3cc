#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "nsf/grid.hpp"

using namespace nsf;

namespace {
constexpr double pi = std::numbers::pi;

double max_abs(const ScalarField& s) { return nsf::max_abs(s.values()); }
}  // namespace

TEST(Grid, ShapesAndSpacing) {
  const Grid g(2.0, 1.0, 8, 4);
  EXPECT_DOUBLE_EQ(g.hx(), 0.25);
  EXPECT_DOUBLE_EQ(g.hy(), 0.25);
  const VectorField v = g.faces();
  EXPECT_EQ(v.u.nx(), 9);
  EXPECT_EQ(v.u.ny(), 4);
  EXPECT_EQ(v.v.nx(), 8);
  EXPECT_EQ(v.v.ny(), 5);
  EXPECT_EQ(g.nodes().size(), 45u);
  EXPECT_EQ(g.boundary().size(), 24u);
  EXPECT_THROW(Grid(1.0, 1.0, 1, 4), std::invalid_argument);
  EXPECT_THROW(Grid(0.0, 1.0, 4, 4), std::invalid_argument);
}

TEST(Grid, BoundaryIsCounterclockwiseWithOutwardNormals) {
  const Grid g(1.0, 1.0, 3, 3);
  const auto& b = g.boundary();
  EXPECT_EQ(b.front().side, Side::Bottom);
  EXPECT_EQ(b[3].side, Side::Right);
  EXPECT_EQ(b[6].side, Side::Top);
  EXPECT_EQ(b[9].side, Side::Left);
  for (const BoundaryFace& f : b) {
    // n x tau = +1 and n points away from the centre.
    EXPECT_DOUBLE_EQ(f.normal.x * f.tangent.y - f.normal.y * f.tangent.x, 1.0);
    EXPECT_GT(dot(f.normal, Vec2{f.center.x - 0.5, f.center.y - 0.5}), 0.0);
  }
  // Faces follow each other around the loop.
  for (std::size_t k = 1; k < b.size(); ++k) {
    const double dx = b[k].center.x - b[k - 1].center.x, dy = b[k].center.y - b[k - 1].center.y;
    EXPECT_GT(dx * b[k - 1].tangent.x + dy * b[k - 1].tangent.y, 0.0) << k;
  }
}

TEST(Grid, ShapeMismatchIsRejected) {
  const Grid g(1.0, 1.0, 4, 4);
  EXPECT_THROW(g.check(ScalarField(4, 5)), ShapeMismatch);
  EXPECT_THROW(g.cells() + ScalarField(3, 4), ShapeMismatch);
}

TEST(Operators, GradientOfConstantVanishes) {
  const Grid g(1.3, 0.7, 9, 6);
  const VectorField gr = grad(g.cells(3.5), g);
  EXPECT_EQ(nsf::max_abs(gr.u.values()), 0.0);
  EXPECT_EQ(nsf::max_abs(gr.v.values()), 0.0);
}

TEST(Operators, LinearFieldHasExactDivergenceAndStrain) {
  const Grid g(1.0, 2.0, 8, 10);
  const VectorField v = sample_faces(g, [](Vec2 p) { return Vec2{p.x, -p.y}; });
  EXPECT_LT(max_abs(div(v, g)), 1e-13);
  const TensorField d = sym_grad(v, g);
  for (std::size_t k = 0; k < d.xx.size(); ++k) {
    EXPECT_NEAR(d.xx[k], 1.0, 1e-13);
    EXPECT_NEAR(d.yy[k], -1.0, 1e-13);
    EXPECT_NEAR(d.xy[k], 0.0, 1e-13);
  }
}

TEST(Operators, LaplacianConvergesAtSecondOrder) {
  const double lx = 1.0, ly = 1.5;
  auto f = [&](Vec2 p) { return std::sin(pi * p.x / lx) * std::cos(pi * p.y / ly); };
  double prev = 0.0;
  for (int n : {16, 32, 64}) {
    const Grid g(lx, ly, n, n);
    const ScalarField s = sample_cells(g, f);
    ScalarField exact = sample_cells(g, f);
    exact *= -pi * pi * (1.0 / (lx * lx) + 1.0 / (ly * ly));
    const double err = l2_norm(laplace(s, g, GhostRule::Extrapolate) - exact, g);
    if (prev > 0.0) EXPECT_GT(std::log2(prev / err), 1.9) << n;
    prev = err;
  }
}

TEST(Quadrature, ConstantsAndBoundaryLength) {
  const Grid g(1.0, 1.0, 7, 5);
  EXPECT_NEAR(integrate(g.cells(1.0), g), 1.0, 1e-15);
  EXPECT_NEAR(boundary_integrate(g.boundary_field(1.0), g), 4.0, 1e-14);
  EXPECT_NEAR(integrate(g.nodes(1.0), g), 1.0, 1e-14);
}

TEST(Quadrature, ProductIntegralConvergesAtSecondOrder) {
  double prev = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const Grid g(1.0, 1.0, n, n);
    const double err = std::abs(integrate(sample_cells(g, [](Vec2 p) { return p.x * p.y; }), g) - 0.25);
    // The midpoint rule is exact for bilinear functions.
    EXPECT_LT(err, 1e-14);
    const double err2 =
        std::abs(integrate(sample_cells(g, [](Vec2 p) { return p.x * p.x * p.y; }), g) - 1.0 / 6.0);
    if (prev > 0.0) EXPECT_NEAR(std::log2(prev / err2), 2.0, 0.05) << n;
    prev = err2;
  }
}

TEST(Properties, DiscreteDivergenceTheorem) {
  proptest::Gen gen(21);
  for (int n = 0; n < 40; ++n) {
    const Grid g = gen.grid(3, 20);
    VectorField v = g.faces();
    for (double& x : v.u.raw()) x = gen.uniform(-1, 1);
    for (double& x : v.v.raw()) x = gen.uniform(-1, 1);
    const double lhs = integrate(div(v, g), g), rhs = boundary_integrate(normal_trace(v, g), g);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST(Properties, GradientIsMinusAdjointOfDivergence) {
  proptest::Gen gen(22);
  for (int n = 0; n < 40; ++n) {
    const Grid g = gen.grid(3, 16);
    const ScalarField s = gen.cells(g, -1, 1);
    const VectorField v = gen.noisy_velocity(g, 1.0);
    EXPECT_NEAR(inner(grad(s, g), v, g), -inner(s, div(v, g), g), 1e-12);
  }
}

TEST(Properties, LaplacianIsSymmetricNegativeSemidefinite) {
  proptest::Gen gen(23);
  for (int n = 0; n < 30; ++n) {
    const Grid g = gen.grid(3, 12);
    const ScalarField a = gen.cells(g, -1, 1), b = gen.cells(g, -1, 1);
    EXPECT_NEAR(inner(laplace(a, g), b, g), inner(a, laplace(b, g), g), 1e-10);
    EXPECT_LE(inner(laplace(a, g), a, g), 1e-12);
    // Neumann Laplacian of anything integrates to zero.
    EXPECT_NEAR(integrate(laplace(a, g), g), 0.0, 1e-10);
  }
}

TEST(Properties, DissipationIsNonnegative) {
  proptest::Gen gen(24);
  for (int n = 0; n < 30; ++n) {
    const Grid g = gen.grid(3, 12);
    const VectorField v = gen.noisy_velocity(g, 2.0);
    const double mu = gen.uniform(0.1, 2.0), lambda = gen.uniform(-2.0 * mu / 3.0 + 1e-3, 2.0);
    const ScalarField d = dissipation(v, mu, lambda, g, WallClosure::slip(mu, gen.uniform(0.0, 1.0)));
    for (double x : d.values()) EXPECT_GE(x, -1e-12);
  }
}

TEST(Properties, LpNormIsHomogeneousAndMonotoneInP) {
  proptest::Gen gen(25);
  for (int n = 0; n < 50; ++n) {
    const Grid g(1.0, 1.0, 6, 6);  // unit measure: L^p norms increase with p
    const ScalarField f = gen.cells(g, -3, 3);
    const double c = gen.uniform(-5, 5), p = gen.uniform(1.0, 12.0);
    EXPECT_NEAR(lp_norm(c * f, g, p), std::abs(c) * lp_norm(f, g, p), 1e-12 * lp_norm(f, g, p) * (1 + std::abs(c)));
    EXPECT_LE(lp_norm(f, g, p), lp_norm(f, g, p + 1.0) * (1 + 1e-14));
  }
}

TEST(Sampling, NoPenetrationZeroesWallNormals) {
  const Grid g(1.0, 1.0, 5, 4);
  VectorField v = sample_faces(g, [](Vec2) { return Vec2{1.0, 2.0}; });
  impose_no_penetration(v, g);
  EXPECT_EQ(nsf::max_abs(normal_trace(v, g).values), 0.0);
  EXPECT_EQ(v.u(2, 1), 1.0);
}

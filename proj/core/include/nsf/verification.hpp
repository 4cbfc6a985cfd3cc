#pragma once

// Manufactured-solution and invariant suites shared by the test programs and
// the `nsf verify` command.

#include <string>
#include <vector>

#include "nsf/grid.hpp"
#include "nsf/subsolvers.hpp"

namespace nsf::mms {

// rho* = h(1 + 0.1 cos(pi x) cos(pi y)) transported by a fixed solenoidal-free
// velocity on the unit square, with K == 1.
struct ContinuityCase {
  double h = 1.0;
  double epsilon = 0.1;
  double k = 10.0;
  double rho(Vec2 p) const;
  Vec2 velocity(Vec2 p) const;
  // Continuous residual of the exact pair: eps rho - eps Lap rho + div(rho v) - eps h.
  double forcing(Vec2 p) const;
};

// w* = (sin(pi x)(y(1-y) + mu/f), sin(pi y)(x(1-x) + mu/f)) satisfies
// w.n = 0 and the slip condition on every wall of the unit square.
struct MomentumCase {
  double mu = 1.0;
  double lambda = 0.5;
  double f = 1.0;
  Vec2 w(Vec2 p) const;
  // -div S(w*)
  Vec2 forcing(Vec2 p) const;
};

// s* = 0.3 sin(x + 0.5) cos(0.7 y) + 0.1 with v = 0; theta0 is chosen so the
// Robin heat-flux condition holds exactly.
struct EntropyCase {
  double epsilon = 0.1;
  double m = 2.5;
  double l = 1.5;
  double s(Vec2 p) const;
  Vec2 grad_s(Vec2 p) const;
  double lap_s(Vec2 p) const;
  // -Lap Phi(s*) = -(Phi''|grad s*|^2 + Phi' Lap s*)
  double forcing(Vec2 p) const;
  // Boundary temperature at a point on the unit-square boundary.
  double theta0(Vec2 p) const;
};

struct OrderStudy {
  std::string name;
  std::vector<int> resolutions;
  std::vector<double> errors;
  std::vector<double> orders;  // between consecutive resolutions
  double observed_order = 0.0; // finest pair
  double required_order = 0.0;
  bool passed = false;
};

OrderStudy continuity_study(const std::vector<int>& ns = {32, 64, 128}, const SolveOptions& opts = {});
OrderStudy momentum_study(const std::vector<int>& ns = {32, 64, 128}, const SolveOptions& opts = {});
OrderStudy entropy_study(const std::vector<int>& ns = {32, 64, 128}, const SolveOptions& opts = {});

}  // namespace nsf::mms

namespace nsf::verify {

struct PropertyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<mms::OrderStudy> run_mms_suite();
std::vector<PropertyCheck> run_invariants_suite();

}  // namespace nsf::verify

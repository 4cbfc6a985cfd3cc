#pragma once

#include "nsf/grid.hpp"

namespace nsf {

// Discrete unknowns of the approximative system. The entropy variable s lives
// at cell centers; s_boundary holds its traces on the boundary faces, which
// the Robin heat-flux condition determines. Temperature is always derived.
struct State {
  ScalarField rho;
  VectorField v;
  ScalarField s;
  BoundaryField s_boundary;

  ScalarField theta() const;
  BoundaryField theta_boundary() const;
  friend bool operator==(const State&, const State&) = default;
};

// v = 0, rho = h, s = 0.
State rest_state(const Grid& g, double h);
// Throws ShapeMismatch or std::invalid_argument (non-finite entries, nonzero
// boundary normal velocity).
void check_state(const State& st, const Grid& g);

}  // namespace nsf

#include "nsf/state.hpp"

#include <cmath>
#include <stdexcept>

namespace nsf {

ScalarField State::theta() const {
  ScalarField out = s;
  for (double& x : out.raw()) x = std::exp(x);
  return out;
}

BoundaryField State::theta_boundary() const {
  BoundaryField out = s_boundary;
  for (double& x : out.values) x = std::exp(x);
  return out;
}

State rest_state(const Grid& g, double h) { return {g.cells(h), g.faces(), g.cells(), g.boundary_field()}; }

void check_state(const State& st, const Grid& g) {
  g.check(st.rho);
  g.check(st.v);
  g.check(st.s);
  g.check(st.s_boundary);
  if (!all_finite(st.rho.values())) throw std::invalid_argument("state: density has non-finite entries");
  if (!all_finite(st.v.u.values()) || !all_finite(st.v.v.values()))
    throw std::invalid_argument("state: velocity has non-finite entries");
  if (!all_finite(st.s.values()) || !all_finite(st.s_boundary.values))
    throw std::invalid_argument("state: entropy has non-finite entries");
  if (max_abs(normal_trace(st.v, g).values) != 0.0)
    throw std::invalid_argument("state: velocity has nonzero normal component on the boundary");
}

}  // namespace nsf

#pragma once

// Sparse-matrix forms of the staggered operators used by the solvers.

#include "linear_solver.hpp"
#include "nsf/grid.hpp"

namespace nsf::detail {

// Interior faces (the velocity unknowns): u faces with 1 <= i <= nx-1 first,
// then v faces with 1 <= j <= ny-1.
struct FaceIndex {
  explicit FaceIndex(const Grid& g) : nx(g.nx()), ny(g.ny()), nu((nx - 1) * ny), nv(nx * (ny - 1)), n(nu + nv) {}
  int nx, ny, nu, nv, n;
  // -1 for boundary faces.
  int u(int i, int j) const { return (i <= 0 || i >= nx) ? -1 : j * (nx - 1) + (i - 1); }
  int v(int i, int j) const { return (j <= 0 || j >= ny) ? -1 : nu + (j - 1) * nx + i; }
};

inline int cell_index(const Grid& g, int i, int j) { return j * g.nx() + i; }

Vec pack_interior(const VectorField& v, const Grid& g);
VectorField unpack_interior(const Vec& x, const Grid& g);
Vec pack(const ScalarField& s);
ScalarField unpack_cells(const Vec& x, const Grid& g);

// Five-point Neumann Laplacian, sum over interior neighbours of (s_nb - s_c)/h^2.
SpMat neumann_laplacian(const Grid& g);
// -div S(w) on interior faces with slip walls.
SpMat lame_operator(const Grid& g, double mu, double lambda, double friction);
// Centered gradient from cells to interior faces.
SpMat cell_gradient(const Grid& g);
// Arithmetic mean of the two adjacent cells at each interior face.
SpMat face_average(const Grid& g);

}  // namespace nsf::detail

#include "nsf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nsf {

Grid::Grid(double lx, double ly, int nx, int ny) : lx_(lx), ly_(ly), nx_(nx), ny_(ny) {
  if (!(std::isfinite(lx) && std::isfinite(ly) && lx > 0.0 && ly > 0.0))
    throw std::invalid_argument("Grid: side lengths must be finite and positive");
  if (nx < 2 || ny < 2) throw std::invalid_argument("Grid: need at least 2 cells per direction");
  hx_ = lx / nx;
  hy_ = ly / ny;

  boundary_.reserve(2 * static_cast<std::size_t>(nx + ny));
  for (int i = 0; i < nx; ++i)
    boundary_.push_back({Side::Bottom, i, 0, {(i + 0.5) * hx_, 0.0}, {0.0, -1.0}, {1.0, 0.0}, hx_});
  for (int j = 0; j < ny; ++j)
    boundary_.push_back({Side::Right, nx - 1, j, {lx, (j + 0.5) * hy_}, {1.0, 0.0}, {0.0, 1.0}, hy_});
  for (int i = nx - 1; i >= 0; --i)
    boundary_.push_back({Side::Top, i, ny - 1, {(i + 0.5) * hx_, ly}, {0.0, 1.0}, {-1.0, 0.0}, hx_});
  for (int j = ny - 1; j >= 0; --j)
    boundary_.push_back({Side::Left, 0, j, {0.0, (j + 0.5) * hy_}, {-1.0, 0.0}, {0.0, -1.0}, hy_});
}

double Grid::node_weight(int i, int j) const {
  const double fx = (i == 0 || i == nx_) ? 0.5 : 1.0;
  const double fy = (j == 0 || j == ny_) ? 0.5 : 1.0;
  return fx * fy * hx_ * hy_;
}

void Grid::check(const ScalarField& s) const {
  if (s.nx() != nx_ || s.ny() != ny_)
    throw ShapeMismatch("cell field " + std::to_string(s.nx()) + "x" + std::to_string(s.ny()) +
                        " does not match grid " + std::to_string(nx_) + "x" + std::to_string(ny_));
}

void Grid::check(const NodeField& s) const {
  if (s.nx() != nx_ + 1 || s.ny() != ny_ + 1) throw ShapeMismatch("node field does not match grid");
}

void Grid::check(const VectorField& v) const {
  if (v.u.nx() != nx_ + 1 || v.u.ny() != ny_ || v.v.nx() != nx_ || v.v.ny() != ny_ + 1)
    throw ShapeMismatch("face field does not match grid");
}

void Grid::check(const BoundaryField& b) const {
  if (b.values.size() != boundary_.size()) throw ShapeMismatch("boundary field does not match grid");
}

VectorField grad(const ScalarField& s, const Grid& g) {
  g.check(s);
  const int nx = g.nx(), ny = g.ny();
  VectorField out = g.faces();
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) out.u(i, j) = (s(i, j) - s(i - 1, j)) / g.hx();
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out.v(i, j) = (s(i, j) - s(i, j - 1)) / g.hy();
  return out;
}

ScalarField div(const VectorField& v, const Grid& g) {
  g.check(v);
  ScalarField out = g.cells();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      out(i, j) = (v.u(i + 1, j) - v.u(i, j)) / g.hx() + (v.v(i, j + 1) - v.v(i, j)) / g.hy();
  return out;
}

namespace {

// Value of s at offset (i+di, j+dj), using the ghost rule outside.
double ghosted(const ScalarField& s, int i, int j, int di, int dj, GhostRule rule) {
  const int nx = s.nx(), ny = s.ny();
  const int ii = i + di, jj = j + dj;
  if (ii >= 0 && ii < nx && jj >= 0 && jj < ny) return s(ii, jj);
  if (rule == GhostRule::Neumann) return s(i, j);
  // Cubic extrapolation from the four nearest interior values along the
  // direction pointing into the domain.
  const int si = -di, sj = -dj;
  auto at = [&](int k) { return s(i + k * si, j + k * sj); };
  return 4.0 * at(0) - 6.0 * at(1) + 4.0 * at(2) - at(3);
}

// du/dy and dv/dx at nodes with the wall closure.
double node_uy(const VectorField& v, const Grid& g, const WallClosure& wc, int i, int j) {
  const int ny = g.ny();
  const double h = g.hy();
  if (j > 0 && j < ny) return (v.u(i, j) - v.u(i, j - 1)) / h;
  if (wc.kind == WallClosure::Kind::Extrapolate) {
    return j == 0 ? (v.u(i, 1) - v.u(i, 0)) / h : (v.u(i, ny - 1) - v.u(i, ny - 2)) / h;
  }
  const double r = wc.slip_ratio(h);
  return j == 0 ? (1.0 - r) * v.u(i, 0) / h : (r - 1.0) * v.u(i, ny - 1) / h;
}

double node_vx(const VectorField& v, const Grid& g, const WallClosure& wc, int i, int j) {
  const int nx = g.nx();
  const double h = g.hx();
  if (i > 0 && i < nx) return (v.v(i, j) - v.v(i - 1, j)) / h;
  if (wc.kind == WallClosure::Kind::Extrapolate) {
    return i == 0 ? (v.v(1, j) - v.v(0, j)) / h : (v.v(nx - 1, j) - v.v(nx - 2, j)) / h;
  }
  const double r = wc.slip_ratio(h);
  return i == 0 ? (1.0 - r) * v.v(0, j) / h : (r - 1.0) * v.v(nx - 1, j) / h;
}

}  // namespace

ScalarField laplace(const ScalarField& s, const Grid& g, GhostRule rule) {
  g.check(s);
  if (rule == GhostRule::Extrapolate && (g.nx() < 4 || g.ny() < 4))
    throw std::invalid_argument("laplace: extrapolated ghosts need at least 4 cells per direction");
  ScalarField out = g.cells();
  const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double c = s(i, j);
      out(i, j) = ax * (ghosted(s, i, j, 1, 0, rule) - 2.0 * c + ghosted(s, i, j, -1, 0, rule)) +
                  ay * (ghosted(s, i, j, 0, 1, rule) - 2.0 * c + ghosted(s, i, j, 0, -1, rule));
    }
  return out;
}

NodeField shear_rate(const VectorField& v, const Grid& g, const WallClosure& wc) {
  g.check(v);
  NodeField out = g.nodes();
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) out(i, j) = node_uy(v, g, wc, i, j) + node_vx(v, g, wc, i, j);
  return out;
}

TensorField sym_grad(const VectorField& v, const Grid& g, const WallClosure& wc) {
  const NodeField gam = shear_rate(v, g, wc);
  TensorField d{g.cells(), g.cells(), g.cells()};
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      d.xx(i, j) = (v.u(i + 1, j) - v.u(i, j)) / g.hx();
      d.yy(i, j) = (v.v(i, j + 1) - v.v(i, j)) / g.hy();
      d.xy(i, j) = 0.125 * (gam(i, j) + gam(i + 1, j) + gam(i, j + 1) + gam(i + 1, j + 1));
    }
  return d;
}

TensorField stress(const VectorField& v, double mu, double lambda, const Grid& g, const WallClosure& wc) {
  TensorField d = sym_grad(v, g, wc);
  TensorField s{g.cells(), g.cells(), g.cells()};
  for (std::size_t k = 0; k < g.num_cells(); ++k) {
    const double dv = d.xx[k] + d.yy[k];
    s.xx[k] = 2.0 * mu * d.xx[k] + lambda * dv;
    s.yy[k] = 2.0 * mu * d.yy[k] + lambda * dv;
    s.xy[k] = 2.0 * mu * d.xy[k];
  }
  return s;
}

ScalarField dissipation(const VectorField& v, double mu, double lambda, const Grid& g, const WallClosure& wc) {
  const NodeField gam = shear_rate(v, g, wc);
  ScalarField out = g.cells();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double ux = (v.u(i + 1, j) - v.u(i, j)) / g.hx();
      const double vy = (v.v(i, j + 1) - v.v(i, j)) / g.hy();
      const double dv = ux + vy;
      const double g2 = 0.25 * (gam(i, j) * gam(i, j) + gam(i + 1, j) * gam(i + 1, j) +
                                gam(i, j + 1) * gam(i, j + 1) + gam(i + 1, j + 1) * gam(i + 1, j + 1));
      out(i, j) = 2.0 * mu * (ux * ux + vy * vy) + lambda * dv * dv + mu * g2;
    }
  return out;
}

ScalarField cell_u(const VectorField& v, const Grid& g) {
  g.check(v);
  ScalarField out = g.cells();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out(i, j) = 0.5 * (v.u(i, j) + v.u(i + 1, j));
  return out;
}

ScalarField cell_v(const VectorField& v, const Grid& g) {
  g.check(v);
  ScalarField out = g.cells();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out(i, j) = 0.5 * (v.v(i, j) + v.v(i, j + 1));
  return out;
}

BoundaryField normal_trace(const VectorField& v, const Grid& g) {
  g.check(v);
  BoundaryField out = g.boundary_field();
  const auto& bf = g.boundary();
  for (std::size_t b = 0; b < bf.size(); ++b) {
    const BoundaryFace& f = bf[b];
    switch (f.side) {
      case Side::Bottom: out.values[b] = -v.v(f.i, 0); break;
      case Side::Top: out.values[b] = v.v(f.i, g.ny()); break;
      case Side::Left: out.values[b] = -v.u(0, f.j); break;
      case Side::Right: out.values[b] = v.u(g.nx(), f.j); break;
    }
  }
  return out;
}

BoundaryField adjacent_trace(const ScalarField& s, const Grid& g) {
  g.check(s);
  BoundaryField out = g.boundary_field();
  const auto& bf = g.boundary();
  for (std::size_t b = 0; b < bf.size(); ++b) out.values[b] = s(bf[b].i, bf[b].j);
  return out;
}

double integrate(const ScalarField& s, const Grid& g) {
  g.check(s);
  // Extended-precision accumulation keeps the mass bookkeeping at round-off
  // level on fine grids.
  long double sum = 0.0L;
  for (double x : s.values()) sum += x;
  return static_cast<double>(sum * g.cell_area());
}

double integrate(const NodeField& s, const Grid& g) {
  g.check(s);
  double sum = 0.0;
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) sum += g.node_weight(i, j) * s(i, j);
  return sum;
}

double boundary_integrate(const BoundaryField& b, const Grid& g) {
  g.check(b);
  double sum = 0.0;
  const auto& bf = g.boundary();
  for (std::size_t k = 0; k < bf.size(); ++k) sum += bf[k].length * b.values[k];
  return sum;
}

double inner(const VectorField& a, const VectorField& b, const Grid& g) {
  g.check(a);
  g.check(b);
  double sum = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) sum += g.xface_weight(i, j) * a.u(i, j) * b.u(i, j);
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) sum += g.yface_weight(i, j) * a.v(i, j) * b.v(i, j);
  return sum;
}

double inner(const ScalarField& a, const ScalarField& b, const Grid& g) {
  g.check(a);
  g.check(b);
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
  return sum * g.cell_area();
}

double l2_norm(const ScalarField& s, const Grid& g) { return std::sqrt(inner(s, s, g)); }
double l2_norm(const VectorField& v, const Grid& g) { return std::sqrt(inner(v, v, g)); }

double lp_norm(const ScalarField& s, const Grid& g, double p) {
  g.check(s);
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (std::isinf(p)) return max_abs(s.values());
  // Scale by the max to keep |x|^p representable for large p.
  const double mx = max_abs(s.values());
  if (mx == 0.0) return 0.0;
  double sum = 0.0;
  for (double x : s.values()) sum += std::pow(std::abs(x) / mx, p);
  return mx * std::pow(sum * g.cell_area(), 1.0 / p);
}

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

ScalarField sample_cells(const Grid& g, const std::function<double(Vec2)>& fn) {
  ScalarField out = g.cells();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out(i, j) = fn(g.cell_center(i, j));
  return out;
}

NodeField sample_nodes(const Grid& g, const std::function<double(Vec2)>& fn) {
  NodeField out = g.nodes();
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) out(i, j) = fn(g.node(i, j));
  return out;
}

VectorField sample_faces(const Grid& g, const std::function<Vec2(Vec2)>& fn) {
  VectorField out = g.faces();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) out.u(i, j) = fn(g.xface_center(i, j)).x;
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out.v(i, j) = fn(g.yface_center(i, j)).y;
  return out;
}

BoundaryField sample_boundary(const Grid& g, const std::function<double(Vec2)>& fn) {
  BoundaryField out = g.boundary_field();
  const auto& bf = g.boundary();
  for (std::size_t k = 0; k < bf.size(); ++k) out.values[k] = fn(bf[k].center);
  return out;
}

void impose_no_penetration(VectorField& v, const Grid& g) {
  g.check(v);
  for (int j = 0; j < g.ny(); ++j) {
    v.u(0, j) = 0.0;
    v.u(g.nx(), j) = 0.0;
  }
  for (int i = 0; i < g.nx(); ++i) {
    v.v(i, 0) = 0.0;
    v.v(i, g.ny()) = 0.0;
  }
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace nsf

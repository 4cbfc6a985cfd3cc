#pragma once

// Staggered (MAC) grid on the rectangle [0,Lx] x [0,Ly].
//
// Layout, with cell (i,j) occupying [i*hx,(i+1)*hx] x [j*hy,(j+1)*hy]:
//   scalars     cell centers              nx     x ny
//   u component x-faces at (i*hx, (j+.5)hy)  (nx+1) x ny
//   v component y-faces at ((i+.5)hx, j*hy)  nx     x (ny+1)
//   nodes       corners (i*hx, j*hy)      (nx+1) x (ny+1)
// Storage is row-major in j: index = j*width + i.
//
// Boundary faces are enumerated counterclockwise: bottom (i=0..nx-1),
// right (j=0..ny-1), top (i=nx-1..0), left (j=ny-1..0). Tangents are the
// counterclockwise unit tangent, so n x tau = +1 everywhere.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace nsf {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <class Tag>
class Array2D {
 public:
  Array2D() = default;
  Array2D(int nx, int ny, double value = 0.0)
      : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), value) {
    if (nx < 0 || ny < 0) throw std::invalid_argument("Array2D: negative extent");
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(j) * nx_ + i]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(j) * nx_ + i]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool same_shape(const Array2D& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }

  Array2D& operator+=(const Array2D& o) {
    check(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Array2D& operator-=(const Array2D& o) {
    check(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Array2D& operator*=(double c) {
    for (double& x : data_) x *= c;
    return *this;
  }
  friend Array2D operator+(Array2D a, const Array2D& b) { return a += b; }
  friend Array2D operator-(Array2D a, const Array2D& b) { return a -= b; }
  friend Array2D operator*(double c, Array2D a) { return a *= c; }
  friend bool operator==(const Array2D&, const Array2D&) = default;

 private:
  void check(const Array2D& o) const {
    if (!same_shape(o)) throw ShapeMismatch("Array2D: shape mismatch");
  }
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> data_;
};

struct CellTag {};
struct NodeTag {};
struct XFaceTag {};
struct YFaceTag {};

using ScalarField = Array2D<CellTag>;
using NodeField = Array2D<NodeTag>;
using XFaceField = Array2D<XFaceTag>;
using YFaceField = Array2D<YFaceTag>;

// Face-normal velocity components. Boundary entries exist in storage so that
// arbitrary sampled fields can be represented; physical velocities keep them 0.
struct VectorField {
  XFaceField u;
  YFaceField v;

  VectorField& operator+=(const VectorField& o) {
    u += o.u;
    v += o.v;
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    u -= o.u;
    v -= o.v;
    return *this;
  }
  VectorField& operator*=(double c) {
    u *= c;
    v *= c;
    return *this;
  }
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double c, VectorField a) { return a *= c; }
  friend bool operator==(const VectorField&, const VectorField&) = default;
};

// Symmetric 2x2 tensor sampled at cell centers.
struct TensorField {
  ScalarField xx;
  ScalarField xy;
  ScalarField yy;
};

// One value per boundary face, in Grid::boundary() order.
struct BoundaryField {
  std::vector<double> values;
  friend bool operator==(const BoundaryField&, const BoundaryField&) = default;
};

enum class Side { Bottom, Right, Top, Left };

struct BoundaryFace {
  Side side;
  int i;  // adjacent cell
  int j;
  Vec2 center;
  Vec2 normal;
  Vec2 tangent;
  double length;
};

class Grid {
 public:
  Grid(double lx, double ly, int nx, int ny);

  double lx() const { return lx_; }
  double ly() const { return ly_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double area() const { return lx_ * ly_; }
  double cell_area() const { return hx_ * hy_; }
  std::size_t num_cells() const { return static_cast<std::size_t>(nx_) * ny_; }

  Vec2 cell_center(int i, int j) const { return {(i + 0.5) * hx_, (j + 0.5) * hy_}; }
  Vec2 xface_center(int i, int j) const { return {i * hx_, (j + 0.5) * hy_}; }
  Vec2 yface_center(int i, int j) const { return {(i + 0.5) * hx_, j * hy_}; }
  Vec2 node(int i, int j) const { return {i * hx_, j * hy_}; }

  // Quadrature weights. Face weights make the face inner product a
  // trapezoidal rule in the normal direction (halved on boundary faces).
  double cell_weight(int, int) const { return hx_ * hy_; }
  double xface_weight(int i, int) const { return (i == 0 || i == nx_) ? 0.5 * hx_ * hy_ : hx_ * hy_; }
  double yface_weight(int, int j) const { return (j == 0 || j == ny_) ? 0.5 * hx_ * hy_ : hx_ * hy_; }
  double node_weight(int i, int j) const;

  const std::vector<BoundaryFace>& boundary() const { return boundary_; }

  ScalarField cells(double value = 0.0) const { return ScalarField(nx_, ny_, value); }
  NodeField nodes(double value = 0.0) const { return NodeField(nx_ + 1, ny_ + 1, value); }
  VectorField faces(double value = 0.0) const {
    return {XFaceField(nx_ + 1, ny_, value), YFaceField(nx_, ny_ + 1, value)};
  }
  BoundaryField boundary_field(double value = 0.0) const { return {std::vector<double>(boundary_.size(), value)}; }

  void check(const ScalarField& s) const;
  void check(const NodeField& s) const;
  void check(const VectorField& v) const;
  void check(const BoundaryField& b) const;

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.lx_ == b.lx_ && a.ly_ == b.ly_ && a.nx_ == b.nx_ && a.ny_ == b.ny_;
  }

 private:
  double lx_, ly_;
  int nx_, ny_;
  double hx_, hy_;
  std::vector<BoundaryFace> boundary_;
};

// Tangential closure used to form ghost values of the tangential velocity
// outside a wall when shear is evaluated at wall nodes.
//   Extrapolate: ghost = 2 u_0 - u_1 (linear extrapolation).
//   Slip:        ghost chosen so that the wall shear stress mu*du_tau/dn at
//                the node equals -f times the wall-averaged tangential velocity,
//                the flat-wall Navier condition.
struct WallClosure {
  enum class Kind { Extrapolate, Slip };
  Kind kind = Kind::Extrapolate;
  double mu = 1.0;
  double friction = 0.0;

  static WallClosure extrapolate() { return {}; }
  static WallClosure slip(double mu, double friction) { return {Kind::Slip, mu, friction}; }
  // Ratio ghost/u_0 for the slip closure at spacing h.
  double slip_ratio(double h) const { return (2.0 * mu - friction * h) / (2.0 * mu + friction * h); }
};

enum class GhostRule { Neumann, Extrapolate };

// Cells -> faces. Interior faces get the centered difference, boundary faces
// get 0 (homogeneous Neumann closure, so grad s . n = 0 on the wall).
VectorField grad(const ScalarField& s, const Grid& g);
// Faces -> cells.
ScalarField div(const VectorField& v, const Grid& g);
// Five-point Laplacian at cell centers. Neumann mirrors the adjacent cell
// into the ghost; Extrapolate uses the cubic ghost 4s0 - 6s1 + 4s2 - s3,
// which reproduces the interior stencil accuracy for fields that are not
// Neumann-compatible (needs at least 4 cells per direction).
ScalarField laplace(const ScalarField& s, const Grid& g, GhostRule rule = GhostRule::Neumann);
// Engineering shear rate du/dy + dv/dx at nodes.
NodeField shear_rate(const VectorField& v, const Grid& g, const WallClosure& wc = {});
// D(v) at cell centers; the off-diagonal is the average of the four corner
// values of half the shear rate.
TensorField sym_grad(const VectorField& v, const Grid& g, const WallClosure& wc = {});
// S(v) = 2 mu D(v) + lambda div(v) I at cell centers.
TensorField stress(const VectorField& v, double mu, double lambda, const Grid& g, const WallClosure& wc = {});
// S(v):grad v at cell centers: 2mu(ux^2+vy^2) + lambda div^2 + mu*avg4(gamma^2).
ScalarField dissipation(const VectorField& v, double mu, double lambda, const Grid& g, const WallClosure& wc = {});

// Cell-center averages of the face components.
ScalarField cell_u(const VectorField& v, const Grid& g);
ScalarField cell_v(const VectorField& v, const Grid& g);
// Normal velocity v.n on each boundary face.
BoundaryField normal_trace(const VectorField& v, const Grid& g);
// Cell-adjacent values, one per boundary face.
BoundaryField adjacent_trace(const ScalarField& s, const Grid& g);

double integrate(const ScalarField& s, const Grid& g);
double integrate(const NodeField& s, const Grid& g);
double boundary_integrate(const BoundaryField& b, const Grid& g);
// Face inner product with the trapezoidal face weights.
double inner(const VectorField& a, const VectorField& b, const Grid& g);
double inner(const ScalarField& a, const ScalarField& b, const Grid& g);
double l2_norm(const ScalarField& s, const Grid& g);
double l2_norm(const VectorField& v, const Grid& g);
double lp_norm(const ScalarField& s, const Grid& g, double p);
double max_abs(std::span<const double> x);

ScalarField sample_cells(const Grid& g, const std::function<double(Vec2)>& fn);
NodeField sample_nodes(const Grid& g, const std::function<double(Vec2)>& fn);
// Samples the normal components of a vector function at face centers.
VectorField sample_faces(const Grid& g, const std::function<Vec2(Vec2)>& fn);
BoundaryField sample_boundary(const Grid& g, const std::function<double(Vec2)>& fn);

// Zeroes the boundary normal components so that v.n = 0 holds exactly.
void impose_no_penetration(VectorField& v, const Grid& g);

bool all_finite(std::span<const double> x);

}  // namespace nsf

#include "nsf/subsolvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "discrete.hpp"

namespace nsf {

using detail::cell_index;
using detail::FaceIndex;
using detail::SpMat;
using detail::Triplets;
using detail::Vec;

void SolveOptions::validate() const {
  if (!(newton_tol > 0.0)) throw std::invalid_argument("solver.newton_tol must be > 0");
  if (!(linear_solver_tol > 0.0)) throw std::invalid_argument("solver.linear_solver_tol must be > 0");
  if (!(picard_damping > 0.0 && picard_damping <= 1.0))
    throw std::invalid_argument("solver.picard_damping must lie in (0, 1]");
  if (max_iter < 1) throw std::invalid_argument("solver.max_iter must be >= 1");
}

double CoupledResiduals::max() const { return std::max({continuity, momentum, entropy}); }

struct SolverWorkspace::Impl {
  std::unique_ptr<detail::LinearSolver> mech;
  double t = -1.0;
  int nx = 0, ny = 0;
  void reset() {
    mech.reset();
    t = -1.0;
  }
};

SolverWorkspace::SolverWorkspace() : impl_(std::make_unique<Impl>()) {}
SolverWorkspace::~SolverWorkspace() = default;
SolverWorkspace::SolverWorkspace(SolverWorkspace&&) noexcept = default;
SolverWorkspace& SolverWorkspace::operator=(SolverWorkspace&&) noexcept = default;
void SolverWorkspace::reset() { impl_->reset(); }

namespace {

// K and its derivative clamp tiny negative round-off densities to 0.
double Ks(const TruncationK& K, double r) { return K.K(std::max(r, 0.0)); }
double Kps(const TruncationK& K, double r) { return K.K_prime(std::max(r, 0.0)); }
// d/drho [K(rho) rho]
double dKr(const TruncationK& K, double r) {
  const double rr = std::max(r, 0.0);
  return K.K(rr) + rr * K.K_prime(rr);
}

double scaled_rms(const Vec& r, const Vec& diag) {
  if (r.size() == 0) return 0.0;
  double s = 0.0;
  for (Eigen::Index k = 0; k < r.size(); ++k) {
    const double d = std::abs(diag[k]);
    const double q = r[k] / (d > 0.0 ? d : 1.0);
    s += q * q;
  }
  return std::sqrt(s / static_cast<double>(r.size()));
}

Vec diagonal(const SpMat& a) { return a.diagonal(); }

// Flux through interior face with normal velocity w: w * c(upwind cell).
// Sign convention: w >= 0 takes the lower-index cell.
struct UpwindFace {
  int lo, hi;  // cells below/left and above/right
  double inv_h;
  double w;
  int up() const { return w >= 0.0 ? lo : hi; }
};

template <class F>
void for_each_interior_face(const Grid& g, const VectorField& v, F&& fn) {
  const FaceIndex fi(g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i)
      fn(fi.u(i, j), UpwindFace{cell_index(g, i - 1, j), cell_index(g, i, j), 1.0 / g.hx(), v.u(i, j)});
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      fn(fi.v(i, j), UpwindFace{cell_index(g, i, j - 1), cell_index(g, i, j), 1.0 / g.hy(), v.v(i, j)});
}

// Matrix U with (U x)_c = div_up(coef * x * v)_c.
SpMat upwind_operator(const VectorField& v, const Vec& coef, const Grid& g) {
  Triplets t;
  t.reserve(4 * g.num_cells());
  for_each_interior_face(g, v, [&](int, const UpwindFace& f) {
    const int up = f.up();
    const double c = f.w * coef[up] * f.inv_h;
    if (c == 0.0) return;
    t.emplace_back(f.lo, up, c);
    t.emplace_back(f.hi, up, -c);
  });
  const int n = static_cast<int>(g.num_cells());
  SpMat m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat identity(int n) {
  SpMat m(n, n);
  m.setIdentity();
  return m;
}

SpMat diag_matrix(const Vec& d) {
  SpMat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  Triplets t;
  for (Eigen::Index k = 0; k < d.size(); ++k) t.emplace_back(static_cast<int>(k), static_cast<int>(k), d[k]);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Vec continuity_forcing(const SolveOptions& opts, const Grid& g) {
  if (opts.manufactured_forcing.continuity) {
    g.check(*opts.manufactured_forcing.continuity);
    return detail::pack(*opts.manufactured_forcing.continuity);
  }
  return Vec::Zero(static_cast<Eigen::Index>(g.num_cells()));
}

Vec momentum_forcing(const SolveOptions& opts, const Grid& g) {
  if (opts.manufactured_forcing.momentum) {
    g.check(*opts.manufactured_forcing.momentum);
    return detail::pack_interior(*opts.manufactured_forcing.momentum, g);
  }
  return Vec::Zero(FaceIndex(g).n);
}

Vec entropy_forcing(const SolveOptions& opts, const Grid& g) {
  if (opts.manufactured_forcing.entropy) {
    g.check(*opts.manufactured_forcing.entropy);
    return detail::pack(*opts.manufactured_forcing.entropy);
  }
  return Vec::Zero(static_cast<Eigen::Index>(g.num_cells()));
}

// Continuity residual for density vector r and face velocity v.
Vec continuity_residual_vec(const Vec& r, const VectorField& v, double eps, double h, const TruncationK& K,
                            const Grid& g, const SpMat& lap, const Vec& q) {
  const Eigen::Index n = r.size();
  Vec res = eps * r - eps * (lap * r) - q;
  for (Eigen::Index c = 0; c < n; ++c) res[c] -= eps * h * Ks(K, r[c]);
  for_each_interior_face(g, v, [&](int, const UpwindFace& f) {
    const int up = f.up();
    const double flux = f.w * Ks(K, r[up]) * r[up] * f.inv_h;
    res[f.lo] += flux;
    res[f.hi] -= flux;
  });
  return res;
}

// Newton Jacobian of the continuity residual w.r.t. rho at fixed v.
SpMat continuity_jacobian(const Vec& r, const VectorField& v, double eps, double h, const TruncationK& K,
                          const Grid& g, const SpMat& lap) {
  const int n = static_cast<int>(r.size());
  Vec dk(n), kp(n);
  for (int c = 0; c < n; ++c) {
    dk[c] = dKr(K, r[c]);
    kp[c] = Kps(K, r[c]);
  }
  SpMat j = eps * identity(n) - eps * lap + upwind_operator(v, dk, g) - eps * h * diag_matrix(kp);
  return j;
}

double mass_defect(const Vec& r, const TruncationK& K, double h, double eps, const Vec& q, const Grid& g) {
  long double sr = 0.0L, sk = 0.0L, sq = 0.0L;
  for (Eigen::Index c = 0; c < r.size(); ++c) {
    sr += r[c];
    sk += Ks(K, r[c]);
    sq += q[c];
  }
  const long double a = g.cell_area();
  return static_cast<double>(std::abs(a * sr - h * a * sk - a * sq / eps));
}

// Uniform shift delta with int(r+delta) - h int K(r+delta) = int q/eps. It
// removes the linear-solver round-off left in the mass identity; shifts
// larger than 1e-10 indicate a real defect and are not applied.
void close_mass_identity(Vec& r, const TruncationK& K, double h, double eps, const Vec& q) {
  long double target = 0.0L;
  for (Eigen::Index c = 0; c < q.size(); ++c) target += q[c];
  target /= eps;
  long double delta = 0.0L;
  for (int pass = 0; pass < 3; ++pass) {
    long double f = -target, df = 0.0L;
    for (Eigen::Index c = 0; c < r.size(); ++c) {
      const double rc = r[c] + static_cast<double>(delta);
      f += rc - h * Ks(K, rc);
      df += 1.0 - h * Kps(K, rc);
    }
    if (df <= 0.0L) return;
    delta -= f / df;
  }
  if (std::abs(delta) > 1e-10L) return;
  r.array() += static_cast<double>(delta);
}

double max_of(const Vec& x) { return x.size() ? x.maxCoeff() : 0.0; }
double min_of(const Vec& x) { return x.size() ? x.minCoeff() : 0.0; }

void check_truncation_bound(const Vec& r, const TruncationK& K, const std::string& stage, const SolveTrace& trace) {
  const double mn = min_of(r), mx = max_of(r);
  if (mn < -1e-12) throw SolverError(stage, "negative density " + std::to_string(mn) + " (scheme violation)", trace);
  if (mx > K.k() + 1.0 + 1e-12)
    throw SolverError(stage, "density " + std::to_string(mx) + " exceeds truncation cap k+1", trace);
}

Vec face_force(const ModelParams& mp, const Grid& g) {
  const FaceIndex fi(g);
  Vec f(fi.n);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) f[fi.u(i, j)] = mp.force(g.xface_center(i, j)).x;
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) f[fi.v(i, j)] = mp.force(g.yface_center(i, j)).y;
  return f;
}

Vec pressure_cells(const Vec& r, const ScalarField& s, const Constitutive& cons) {
  Vec p(r.size());
  for (Eigen::Index c = 0; c < r.size(); ++c) p[c] = cons.P(std::max(r[c], 0.0), std::exp(s[static_cast<std::size_t>(c)]));
  return p;
}

Vec kr_cells(const Vec& r, const TruncationK& K) {
  Vec out(r.size());
  for (Eigen::Index c = 0; c < r.size(); ++c) out[c] = Ks(K, r[c]) * std::max(r[c], 0.0);
  return out;
}

WallClosure slip_of(const ModelParams& mp) { return WallClosure::slip(mp.mu, mp.f); }

// Assembled momentum pieces that do not depend on the velocity unknown.
struct MomentumOps {
  SpMat A, G, Avg;
  Vec force;
  MomentumOps(const ModelParams& mp, const Grid& g)
      : A(detail::lame_operator(g, mp.mu, mp.lambda, mp.f)),
        G(detail::cell_gradient(g)),
        Avg(detail::face_average(g)),
        force(face_force(mp, g)) {}
};

// t * [G P - avg(K rho) F + conv] - q : the part of the momentum residual
// that does not involve w.
Vec momentum_load(const Vec& r, const ScalarField& s, const Vec& conv, double t, const MomentumOps& ops,
                  const Constitutive& cons, const TruncationK& K, const Vec& q) {
  const Vec p = pressure_cells(r, s, cons);
  const Vec kr = kr_cells(r, K);
  Vec load = t * (ops.G * p - (ops.Avg * kr).cwiseProduct(ops.force) + conv) - q;
  return load;
}

// Entropy discretization helper.
struct EntropySystem {
  const Grid& g;
  const Kirchhoff& phi;
  const Constitutive& cons;
  double eps, t;
  std::vector<double> theta0;  // per boundary face
  Vec source;                  // t R + q at cells
  std::vector<std::vector<int>> cell_walls;

  EntropySystem(const Grid& g_, const Kirchhoff& phi_, const Constitutive& cons_, double eps_, double t_,
                const ModelParams& mp, Vec src)
      : g(g_), phi(phi_), cons(cons_), eps(eps_), t(t_), source(std::move(src)), cell_walls(g_.num_cells()) {
    const auto& bf = g.boundary();
    theta0.resize(bf.size());
    for (std::size_t b = 0; b < bf.size(); ++b) {
      theta0[b] = mp.theta0(bf[b].center);
      cell_walls[static_cast<std::size_t>(cell_index(g, bf[b].i, bf[b].j))].push_back(static_cast<int>(b));
    }
  }

  int nc() const { return static_cast<int>(g.num_cells()); }
  int nb() const { return static_cast<int>(g.boundary().size()); }
  double h_perp(int b) const {
    const Side sd = g.boundary()[static_cast<std::size_t>(b)].side;
    return (sd == Side::Bottom || sd == Side::Top) ? g.hy() : g.hx();
  }
  // Outward diffusive flux Phi'(z) dz/dn prescribed by the Robin condition.
  double wall_flux(int b, double z) const {
    const double th = std::exp(z);
    return -eps * z - t * cons.L_coef(th) * (th - theta0[static_cast<std::size_t>(b)]);
  }
  double wall_flux_prime(int b, double z) const {
    const double th = std::exp(z);
    return -eps - t * th * (cons.L_prime(th) * (th - theta0[static_cast<std::size_t>(b)]) + cons.L_coef(th));
  }

  Vec residual(const Vec& z) const {
    const int n = nc();
    Vec ph(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) ph[k] = phi.Phi(z[k]);
    Vec r(z.size());
    const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const int c = cell_index(g, i, j);
        double acc = 0.0;
        if (i > 0) acc -= ax * (ph[c - 1] - ph[c]);
        if (i < g.nx() - 1) acc -= ax * (ph[c + 1] - ph[c]);
        if (j > 0) acc -= ay * (ph[c - g.nx()] - ph[c]);
        if (j < g.ny() - 1) acc -= ay * (ph[c + g.nx()] - ph[c]);
        for (int b : cell_walls[static_cast<std::size_t>(c)]) acc -= wall_flux(b, z[n + b]) / h_perp(b);
        r[c] = acc - source[c];
      }
    const auto& bf = g.boundary();
    for (int b = 0; b < nb(); ++b) {
      const int c = cell_index(g, bf[static_cast<std::size_t>(b)].i, bf[static_cast<std::size_t>(b)].j);
      r[n + b] = 2.0 * (ph[n + b] - ph[c]) / h_perp(b) - wall_flux(b, z[n + b]);
    }
    return r;
  }

  SpMat jacobian(const Vec& z) const {
    const int n = nc();
    Vec dp(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) dp[k] = phi.Phi_prime(z[k]);
    Triplets tr;
    tr.reserve(6 * z.size());
    const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const int c = cell_index(g, i, j);
        double diag = 0.0;
        auto nbr = [&](int nbc, double a) {
          tr.emplace_back(c, nbc, -a * dp[nbc]);
          diag += a * dp[c];
        };
        if (i > 0) nbr(c - 1, ax);
        if (i < g.nx() - 1) nbr(c + 1, ax);
        if (j > 0) nbr(c - g.nx(), ay);
        if (j < g.ny() - 1) nbr(c + g.nx(), ay);
        tr.emplace_back(c, c, diag);
        for (int b : cell_walls[static_cast<std::size_t>(c)])
          tr.emplace_back(c, n + b, -wall_flux_prime(b, z[n + b]) / h_perp(b));
      }
    const auto& bf = g.boundary();
    for (int b = 0; b < nb(); ++b) {
      const int c = cell_index(g, bf[static_cast<std::size_t>(b)].i, bf[static_cast<std::size_t>(b)].j);
      tr.emplace_back(n + b, n + b, 2.0 * dp[n + b] / h_perp(b) - wall_flux_prime(b, z[n + b]));
      tr.emplace_back(n + b, c, -2.0 * dp[c] / h_perp(b));
    }
    SpMat m(n + nb(), n + nb());
    m.setFromTriplets(tr.begin(), tr.end());
    return m;
  }
};

Vec entropy_source_vec(const ScalarField& rho, const VectorField& v, const ScalarField& s_old, double t,
                       const ModelParams& mp, const TruncationK& K, const Grid& g, const SolveOptions& opts) {
  Vec src = Vec::Zero(static_cast<Eigen::Index>(g.num_cells()));
  if (t != 0.0) src = t * detail::pack(energy_source(rho, v, s_old, mp, K, g));
  return src + entropy_forcing(opts, g);
}

Vec pack_entropy(const ScalarField& z, const BoundaryField& zb) {
  Vec x(static_cast<Eigen::Index>(z.size() + zb.values.size()));
  for (std::size_t k = 0; k < z.size(); ++k) x[static_cast<Eigen::Index>(k)] = z[k];
  for (std::size_t k = 0; k < zb.values.size(); ++k) x[static_cast<Eigen::Index>(z.size() + k)] = zb.values[k];
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Field-level helpers

ScalarField advective_derivative(const VectorField& v, const ScalarField& q, const Grid& g) {
  g.check(v);
  g.check(q);
  ScalarField out = g.cells();
  const int nx = g.nx(), ny = g.ny();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double ax = 0.0, ay = 0.0;
      if (i < nx - 1) ax += v.u(i + 1, j) * (q(i + 1, j) - q(i, j));
      if (i > 0) ax += v.u(i, j) * (q(i, j) - q(i - 1, j));
      if (j < ny - 1) ay += v.v(i, j + 1) * (q(i, j + 1) - q(i, j));
      if (j > 0) ay += v.v(i, j) * (q(i, j) - q(i, j - 1));
      out(i, j) = 0.5 * ax / g.hx() + 0.5 * ay / g.hy();
    }
  return out;
}

ScalarField energy_source(const ScalarField& rho, const VectorField& v, const ScalarField& s_old,
                          const ModelParams& mp, const TruncationK& K, const Grid& g) {
  g.check(rho);
  g.check(v);
  g.check(s_old);
  const ScalarField diss = dissipation(v, mp.mu, mp.lambda, g, slip_of(mp));
  ScalarField ik = g.cells(), kr = g.cells(), kc = g.cells();
  for (std::size_t c = 0; c < rho.size(); ++c) {
    const double r = std::max(rho[c], 0.0);
    ik[c] = K.int_K(r);
    kc[c] = K.K(r);
    kr[c] = kc[c] * r;
  }
  // Central face values of the transported densities.
  auto flux_div = [&](const ScalarField& q) {
    VectorField f = g.faces();
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 1; i < g.nx(); ++i) f.u(i, j) = v.u(i, j) * 0.5 * (q(i - 1, j) + q(i, j));
    for (int j = 1; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) f.v(i, j) = v.v(i, j) * 0.5 * (q(i, j - 1) + q(i, j));
    return div(f, g);
  };
  const ScalarField dik = flux_div(ik), dkr = flux_div(kr);
  const ScalarField adv_s = advective_derivative(v, s_old, g);
  const ScalarField adv_r = advective_derivative(v, rho, g);
  ScalarField out = g.cells();
  for (std::size_t c = 0; c < rho.size(); ++c) {
    const double th = std::exp(s_old[c]);
    out[c] = diss[c] - mp.a2 * th * (dik[c] + dkr[c]) - mp.a2 * th * kr[c] * adv_s[c] + mp.a2 * th * kc[c] * adv_r[c];
  }
  return out;
}

VectorField convection(const VectorField& v, const ScalarField& c, const Grid& g, const WallClosure& wc) {
  g.check(v);
  g.check(c);
  const int nx = g.nx(), ny = g.ny();
  const double hx = g.hx(), hy = g.hy();
  VectorField out = g.faces();
  const double rx = wc.slip_ratio(hx), ry = wc.slip_ratio(hy);
  auto ghost = [&](double u0, double u1, double r) {
    return wc.kind == WallClosure::Kind::Slip ? r * u0 : 2.0 * u0 - u1;
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      auto uc = [&](int ii) { return 0.5 * (v.u(ii, j) + v.u(ii + 1, j)); };
      const double divx = (c(i, j) * uc(i) * uc(i) - c(i - 1, j) * uc(i - 1) * uc(i - 1)) / hx;
      auto node_flux = [&](int jn) {
        if (jn == 0 || jn == ny) return 0.0;
        const double un = 0.5 * (v.u(i, jn - 1) + v.u(i, jn));
        const double vn = 0.5 * (v.v(i - 1, jn) + v.v(i, jn));
        const double cn = 0.25 * (c(i - 1, jn - 1) + c(i, jn - 1) + c(i - 1, jn) + c(i, jn));
        return cn * un * vn;
      };
      const double divy = (node_flux(j + 1) - node_flux(j)) / hy;
      const double cf = 0.5 * (c(i - 1, j) + c(i, j));
      const double ux = (v.u(i + 1, j) - v.u(i - 1, j)) / (2.0 * hx);
      const double vf = 0.25 * (v.v(i - 1, j) + v.v(i, j) + v.v(i - 1, j + 1) + v.v(i, j + 1));
      const double below = j > 0 ? v.u(i, j - 1) : ghost(v.u(i, 0), v.u(i, 1), ry);
      const double above = j < ny - 1 ? v.u(i, j + 1) : ghost(v.u(i, ny - 1), v.u(i, ny - 2), ry);
      const double uy = (above - below) / (2.0 * hy);
      out.u(i, j) = 0.5 * (divx + divy) + 0.5 * cf * (v.u(i, j) * ux + vf * uy);
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      auto vc = [&](int jj) { return 0.5 * (v.v(i, jj) + v.v(i, jj + 1)); };
      const double divy = (c(i, j) * vc(j) * vc(j) - c(i, j - 1) * vc(j - 1) * vc(j - 1)) / hy;
      auto node_flux = [&](int in) {
        if (in == 0 || in == nx) return 0.0;
        const double vn = 0.5 * (v.v(in - 1, j) + v.v(in, j));
        const double un = 0.5 * (v.u(in, j - 1) + v.u(in, j));
        const double cn = 0.25 * (c(in - 1, j - 1) + c(in, j - 1) + c(in - 1, j) + c(in, j));
        return cn * un * vn;
      };
      const double divx = (node_flux(i + 1) - node_flux(i)) / hx;
      const double cf = 0.5 * (c(i, j - 1) + c(i, j));
      const double vy = (v.v(i, j + 1) - v.v(i, j - 1)) / (2.0 * hy);
      const double uf = 0.25 * (v.u(i, j - 1) + v.u(i + 1, j - 1) + v.u(i, j) + v.u(i + 1, j));
      const double left = i > 0 ? v.v(i - 1, j) : ghost(v.v(0, j), v.v(1, j), rx);
      const double right = i < nx - 1 ? v.v(i + 1, j) : ghost(v.v(nx - 1, j), v.v(nx - 2, j), rx);
      const double vx = (right - left) / (2.0 * hx);
      out.v(i, j) = 0.5 * (divx + divy) + 0.5 * cf * (uf * vx + v.v(i, j) * vy);
    }
  return out;
}

VectorField lame_apply(const VectorField& w, const ModelParams& mp, const Grid& g) {
  const NodeField gam = shear_rate(w, g, slip_of(mp));
  const int nx = g.nx(), ny = g.ny();
  const double mu = mp.mu, lam = mp.lambda;
  auto ux = [&](int i, int j) { return (w.u(i + 1, j) - w.u(i, j)) / g.hx(); };
  auto vy = [&](int i, int j) { return (w.v(i, j + 1) - w.v(i, j)) / g.hy(); };
  auto sxx = [&](int i, int j) { return 2 * mu * ux(i, j) + lam * (ux(i, j) + vy(i, j)); };
  auto syy = [&](int i, int j) { return 2 * mu * vy(i, j) + lam * (ux(i, j) + vy(i, j)); };
  VectorField out = g.faces();
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i)
      out.u(i, j) = -((sxx(i, j) - sxx(i - 1, j)) / g.hx() + mu * (gam(i, j + 1) - gam(i, j)) / g.hy());
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      out.v(i, j) = -(mu * (gam(i + 1, j) - gam(i, j)) / g.hx() + (syy(i, j) - syy(i, j - 1)) / g.hy());
  return out;
}

// ---------------------------------------------------------------------------
// Residual evaluation

ScalarField continuity_residual(const ScalarField& rho, const VectorField& v, const ModelParams& mp,
                                const ApproxParams& ap, const TruncationK& K, const Grid& g,
                                const SolveOptions& opts) {
  g.check(rho);
  g.check(v);
  const SpMat lap = detail::neumann_laplacian(g);
  const Vec r = continuity_residual_vec(detail::pack(rho), v, ap.epsilon, mean_density(mp, g), K, g, lap,
                                        continuity_forcing(opts, g));
  return detail::unpack_cells(r, g);
}

VectorField momentum_residual(const VectorField& w, const ScalarField& rho, const ScalarField& s,
                              const VectorField& v_old, double t, const ModelParams& mp, const TruncationK& K,
                              const Grid& g, const SolveOptions& opts) {
  g.check(w);
  g.check(rho);
  g.check(s);
  g.check(v_old);
  const MomentumOps ops(mp, g);
  const Constitutive cons(mp, K);
  const Vec r = detail::pack(rho);
  const Vec conv = detail::pack_interior(convection(v_old, detail::unpack_cells(kr_cells(r, K), g), g, slip_of(mp)), g);
  const Vec res = ops.A * detail::pack_interior(w, g) + momentum_load(r, s, conv, t, ops, cons, K, momentum_forcing(opts, g));
  return detail::unpack_interior(res, g);
}

EntropyResidual entropy_residual(const ScalarField& z, const BoundaryField& zb, const ScalarField& rho,
                                 const VectorField& v, const ScalarField& s_old, double t, const ModelParams& mp,
                                 const ApproxParams& ap, const TruncationK& K, const Grid& g,
                                 const SolveOptions& opts) {
  g.check(z);
  g.check(zb);
  const Kirchhoff phi(ap.epsilon, mp.m, mp.a3);
  const Constitutive cons(mp, K);
  const EntropySystem sys(g, phi, cons, ap.epsilon, t, mp, entropy_source_vec(rho, v, s_old, t, mp, K, g, opts));
  const Vec r = sys.residual(pack_entropy(z, zb));
  EntropyResidual out{g.cells(), g.boundary_field()};
  for (std::size_t k = 0; k < z.size(); ++k) out.cells[k] = r[static_cast<Eigen::Index>(k)];
  for (std::size_t k = 0; k < zb.values.size(); ++k) out.walls.values[k] = r[static_cast<Eigen::Index>(z.size() + k)];
  return out;
}

CoupledResiduals coupled_residuals(const State& st, double t, const ModelParams& mp, const ApproxParams& ap,
                                   const TruncationK& K, const Grid& g, const SolveOptions& opts) {
  check_state(st, g);
  CoupledResiduals out;
  const double eps = ap.epsilon, h = mean_density(mp, g);
  const SpMat lap = detail::neumann_laplacian(g);
  const Vec r = detail::pack(st.rho);
  const Vec rc = continuity_residual_vec(r, st.v, eps, h, K, g, lap, continuity_forcing(opts, g));
  out.continuity = scaled_rms(rc, diagonal(continuity_jacobian(r, st.v, eps, h, K, g, lap)));

  const MomentumOps ops(mp, g);
  const Vec rm = detail::pack_interior(momentum_residual(st.v, st.rho, st.s, st.v, t, mp, K, g, opts), g);
  out.momentum = scaled_rms(rm, diagonal(ops.A));

  const Kirchhoff phi(eps, mp.m, mp.a3);
  const Constitutive cons(mp, K);
  const EntropySystem sys(g, phi, cons, eps, t, mp, entropy_source_vec(st.rho, st.v, st.s, t, mp, K, g, opts));
  const Vec z = pack_entropy(st.s, st.s_boundary);
  out.entropy = scaled_rms(sys.residual(z), diagonal(sys.jacobian(z)));
  return out;
}

double mass_identity_defect(const ScalarField& rho, const ModelParams& mp, const ApproxParams& ap,
                            const TruncationK& K, const Grid& g, const SolveOptions& opts) {
  g.check(rho);
  return mass_defect(detail::pack(rho), K, mean_density(mp, g), ap.epsilon, continuity_forcing(opts, g), g);
}

// ---------------------------------------------------------------------------
// Continuity solve

ContinuityResult solve_continuity(const VectorField& v, const ModelParams& mp, const ApproxParams& ap,
                                  const TruncationK& K, const Grid& g, const SolveOptions& opts,
                                  const ScalarField* initial) {
  opts.validate();
  g.check(v);
  if (!(ap.epsilon > 0.0)) throw std::invalid_argument("solve_continuity: epsilon must be > 0");
  if (max_abs(normal_trace(v, g).values) != 0.0)
    throw std::invalid_argument("solve_continuity: velocity must satisfy v.n = 0 on the boundary");
  const double eps = ap.epsilon, h = mean_density(mp, g);
  const int n = static_cast<int>(g.num_cells());
  const SpMat lap = detail::neumann_laplacian(g);
  const Vec q = continuity_forcing(opts, g);
  const SpMat base = eps * identity(n) - eps * lap;

  Vec r = initial ? detail::pack(*initial) : Vec::Constant(n, h);
  ContinuityResult out;
  out.trace.solver = opts.continuity_method == ContinuityMethod::Picard ? "continuity-picard" : "continuity-newton";
  const double alpha = opts.picard_damping;
  int polish = 0;
  double last_update = std::numeric_limits<double>::infinity();

  for (int it = 0; it < opts.max_iter; ++it) {
    Vec next;
    const Vec res = continuity_residual_vec(r, v, eps, h, K, g, lap, q);
    const SpMat jac = continuity_jacobian(r, v, eps, h, K, g, lap);
    const double sres = scaled_rms(res, diagonal(jac));
    if (opts.continuity_method == ContinuityMethod::Picard) {
      Vec kl(n), rhs(n);
      for (int c = 0; c < n; ++c) {
        kl[c] = Ks(K, r[c]);
        rhs[c] = eps * h * kl[c] + q[c];
      }
      const SpMat a = base + upwind_operator(v, kl, g);
      const Vec sol = detail::solve_sparse(a, rhs, opts.linear_backend, opts.linear_solver_tol);
      ++out.trace.factorizations;
      if (min_of(sol) < -1e-12) {
        SolveTrace tr = out.trace;
        throw SolverError("continuity", "negative density after linear solve (M-matrix violated)", tr);
      }
      next = (1.0 - alpha) * r + alpha * sol;
    } else {
      const Vec step = detail::solve_sparse(jac, -res, opts.linear_backend, opts.linear_solver_tol);
      ++out.trace.factorizations;
      double lam = 1.0;
      next = r + step;
      while (min_of(next) < 0.0 && lam > 1e-3) {
        lam *= 0.5;
        next = r + lam * step;
      }
    }
    const double upd = (next - r).lpNorm<Eigen::Infinity>();
    out.trace.records.push_back({it, sres, upd, alpha});
    r = std::move(next);
    const double scale = std::max(1.0, r.lpNorm<Eigen::Infinity>());
    if (upd <= opts.newton_tol * scale) {
      // Keep iterating while the update still shrinks, down to round-off, so
      // that the mass identity holds to summation accuracy.
      if (upd <= 1e-15 * scale || upd >= last_update || polish >= 3) {
        out.trace.converged = true;
        break;
      }
      ++polish;
    }
    last_update = upd;
  }
  if (!out.trace.converged && opts.continuity_method == ContinuityMethod::Picard) {
    // Lagging K(rho) in the source has gain about h max|K'|, which exceeds 1
    // inside the truncation band when h is close to k. Newton handles that.
    SolveOptions nopts = opts;
    nopts.continuity_method = ContinuityMethod::Newton;
    ContinuityResult nr = solve_continuity(v, mp, ap, K, g, nopts, initial);
    nr.trace.solver = "continuity-picard+newton";
    nr.trace.factorizations += out.trace.factorizations;
    nr.trace.records.insert(nr.trace.records.begin(), out.trace.records.begin(), out.trace.records.end());
    return nr;
  }
  if (!out.trace.converged) throw SolverError("continuity", "iteration did not converge", out.trace);
  close_mass_identity(r, K, h, eps, q);
  check_truncation_bound(r, K, "continuity", out.trace);
  out.rho = detail::unpack_cells(r, g);
  out.mass_defect = mass_defect(r, K, h, eps, q, g);
  out.max_excess = max_of(r) - K.k();
  return out;
}

// ---------------------------------------------------------------------------
// Momentum solve

MomentumResult solve_momentum(const ScalarField& rho, const ScalarField& s, const VectorField& v_old, double t,
                              const ModelParams& mp, const TruncationK& K, const Grid& g, const SolveOptions& opts) {
  opts.validate();
  g.check(rho);
  g.check(s);
  g.check(v_old);
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("solve_momentum: t must lie in [0, 1]");
  if (!(mp.mu > 0.0)) throw SolverError("momentum", "singular Lame system (mu <= 0)");
  const MomentumOps ops(mp, g);
  const Constitutive cons(mp, K);
  const Vec r = detail::pack(rho);
  const Vec conv = detail::pack_interior(convection(v_old, detail::unpack_cells(kr_cells(r, K), g), g, slip_of(mp)), g);
  const Vec load = momentum_load(r, s, conv, t, ops, cons, K, momentum_forcing(opts, g));
  MomentumResult out;
  out.trace.solver = "momentum-direct";
  const Vec w = detail::solve_sparse(ops.A, -load, opts.linear_backend, opts.linear_solver_tol, &out.linear_residual);
  out.trace.factorizations = 1;
  out.trace.records.push_back({0, 0.0, w.size() ? w.lpNorm<Eigen::Infinity>() : 0.0, 1.0});
  out.trace.converged = true;
  out.w = detail::unpack_interior(w, g);
  return out;
}

// ---------------------------------------------------------------------------
// Entropy solve

EntropyResult solve_entropy(const ScalarField& rho, const VectorField& v, const ScalarField& s_old, double t,
                            const ModelParams& mp, const ApproxParams& ap, const TruncationK& K, const Grid& g,
                            const SolveOptions& opts, const ScalarField* z_init, const BoundaryField* zb_init) {
  opts.validate();
  g.check(rho);
  g.check(v);
  g.check(s_old);
  if (!all_finite(s_old.values())) throw std::invalid_argument("solve_entropy: s_old has non-finite entries");
  const Kirchhoff phi(ap.epsilon, mp.m, mp.a3);
  const Constitutive cons(mp, K);
  const EntropySystem sys(g, phi, cons, ap.epsilon, t, mp, entropy_source_vec(rho, v, s_old, t, mp, K, g, opts));

  Vec z = pack_entropy(z_init ? *z_init : s_old, zb_init ? *zb_init : adjacent_trace(z_init ? *z_init : s_old, g));
  EntropyResult out;
  out.trace.solver = "entropy-newton";
  int polish = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vec res = sys.residual(z);
    const SpMat jac = sys.jacobian(z);
    const Vec d = diagonal(jac);
    const double r0 = scaled_rms(res, d);
    if (r0 <= opts.newton_tol) {
      if (r0 == 0.0 || polish >= 1) {
        out.trace.records.push_back({it, r0, 0.0, 0.0});
        out.trace.converged = true;
        break;
      }
      ++polish;
    }
    Vec step = detail::solve_sparse(jac, -res, opts.linear_backend, opts.linear_solver_tol);
    ++out.trace.factorizations;
    const double smax = step.lpNorm<Eigen::Infinity>();
    double lam = smax > 1.0 ? 1.0 / smax : 1.0;
    Vec trial;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      trial = z + lam * step;
      try {
        const double r1 = scaled_rms(sys.residual(trial), d);
        if (std::isfinite(r1) && (r1 < r0 || r0 <= opts.newton_tol)) {
          accepted = true;
          break;
        }
      } catch (const PhiOverflow&) {
      }
      lam *= 0.5;
    }
    if (!accepted) throw SolverError("entropy", "line search failed", out.trace);
    out.trace.records.push_back({it, r0, lam * smax, lam});
    z = trial;
  }
  if (!out.trace.converged) throw SolverError("entropy", "Newton iteration did not converge", out.trace);
  out.s = g.cells();
  out.s_boundary = g.boundary_field();
  for (std::size_t k = 0; k < out.s.size(); ++k) out.s[k] = z[static_cast<Eigen::Index>(k)];
  for (std::size_t k = 0; k < out.s_boundary.values.size(); ++k)
    out.s_boundary.values[k] = z[static_cast<Eigen::Index>(out.s.size() + k)];
  if (!all_finite(out.s.values()) || !all_finite(out.s_boundary.values))
    throw SolverError("entropy", "non-finite entropy", out.trace);
  return out;
}

// ---------------------------------------------------------------------------
// Joint density/velocity solve

MechanicsResult solve_mechanics(const ScalarField& rho_lag, const ScalarField& s, const VectorField& v_old, double t,
                                const ModelParams& mp, const ApproxParams& ap, const TruncationK& K, const Grid& g,
                                const SolveOptions& opts, SolverWorkspace* ws, const VectorField* w_init) {
  opts.validate();
  g.check(rho_lag);
  g.check(s);
  g.check(v_old);
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("solve_mechanics: t must lie in [0, 1]");
  if (!(mp.mu > 0.0)) throw SolverError("mechanics", "singular Lame system (mu <= 0)");

  const double eps = ap.epsilon, h = mean_density(mp, g);
  const int nc = static_cast<int>(g.num_cells());
  const FaceIndex fi(g);
  const SpMat lap = detail::neumann_laplacian(g);
  const MomentumOps ops(mp, g);
  const Constitutive cons(mp, K);
  const Vec qc = continuity_forcing(opts, g);
  const Vec qm = momentum_forcing(opts, g);
  const Vec r_lag = detail::pack(rho_lag);
  const Vec conv =
      detail::pack_interior(convection(v_old, detail::unpack_cells(kr_cells(r_lag, K), g), g, slip_of(mp)), g);

  SolverWorkspace local;
  SolverWorkspace::Impl& cache = (ws ? *ws : local).impl();
  if (cache.nx != g.nx() || cache.ny != g.ny()) {
    cache.reset();
    cache.nx = g.nx();
    cache.ny = g.ny();
  }

  Vec x(nc + fi.n);
  x.head(nc) = r_lag;
  x.tail(fi.n) = detail::pack_interior(w_init ? *w_init : v_old, g);

  auto residual = [&](const Vec& xx) {
    Vec res(xx.size());
    const VectorField w = detail::unpack_interior(xx.tail(fi.n), g);
    res.head(nc) = continuity_residual_vec(xx.head(nc), w, eps, h, K, g, lap, qc);
    res.tail(fi.n) = ops.A * xx.tail(fi.n) + momentum_load(xx.head(nc), s, conv, t, ops, cons, K, qm);
    return res;
  };
  auto jacobian = [&](const Vec& xx) {
    const Vec r = xx.head(nc);
    const VectorField w = detail::unpack_interior(xx.tail(fi.n), g);
    Triplets tr;
    tr.reserve(static_cast<std::size_t>(nc) * 12 + static_cast<std::size_t>(fi.n) * 14);
    auto append = [&tr](const SpMat& m, int r0, int c0) {
      for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) tr.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
    };
    append(continuity_jacobian(r, w, eps, h, K, g, lap), 0, 0);
    // d(continuity)/dw: the flux w * (K rho)_up with frozen upwind side.
    for_each_interior_face(g, w, [&](int f, const UpwindFace& uf) {
      const int up = uf.up();
      const double c = Ks(K, r[up]) * std::max(r[up], 0.0) * uf.inv_h;
      if (c == 0.0) return;
      tr.emplace_back(uf.lo, nc + f, c);
      tr.emplace_back(uf.hi, nc + f, -c);
    });
    if (t != 0.0) {
      Vec pr(nc), dk(nc);
      for (int c = 0; c < nc; ++c) {
        pr[c] = cons.dP_drho(std::max(r[c], 0.0), std::exp(s[static_cast<std::size_t>(c)]));
        dk[c] = dKr(K, r[c]);
      }
      const SpMat jwc = t * (SpMat(ops.G * diag_matrix(pr)) - SpMat(diag_matrix(ops.force) * ops.Avg * diag_matrix(dk)));
      append(jwc, nc, 0);
    }
    append(ops.A, nc, nc);
    SpMat j(nc + fi.n, nc + fi.n);
    j.setFromTriplets(tr.begin(), tr.end());
    return j;
  };

  MechanicsResult out;
  out.trace.solver = "mechanics-newton";
  auto newton = [&]() {
    out.trace.converged = false;
    int polish = 0;
    double rate = 0.0;
    for (int it = 0; it < opts.max_iter; ++it) {
      const Vec res = residual(x);
      const SpMat jac = jacobian(x);
      const Vec d = diagonal(jac);
      const double r0 = scaled_rms(res, d);
      if (!std::isfinite(r0)) throw SolverError("mechanics", "non-finite residual", out.trace);
      if (r0 <= opts.newton_tol) {
        if (r0 == 0.0 || polish >= 2 ||
            (!out.trace.records.empty() &&
             out.trace.records.back().update <= 1e-14 * std::max(1.0, x.lpNorm<Eigen::Infinity>()))) {
          out.trace.records.push_back({it, r0, 0.0, 0.0});
          out.trace.converged = true;
          break;
        }
        ++polish;
      }
      bool fresh = false;
      if (!cache.mech || cache.t != t || rate > 0.3) {
        cache.mech = std::make_unique<detail::LinearSolver>(opts.linear_backend, opts.linear_solver_tol);
        cache.mech->factorize(jac);
        cache.t = t;
        fresh = true;
        ++out.trace.factorizations;
      }
      Vec step = cache.mech->solve(-res);
      double lam = 1.0;
      bool accepted = false;
      Vec trial;
      double r1 = 0.0;
      for (int ls = 0; ls < 20; ++ls) {
        trial = x + lam * step;
        if (min_of(trial.head(nc)) >= 0.0) {
          r1 = scaled_rms(residual(trial), d);
          if (std::isfinite(r1) && (r1 < r0 || r0 <= opts.newton_tol)) {
            accepted = true;
            break;
          }
        }
        if (!fresh) break;
        lam *= 0.5;
      }
      if (!accepted) {
        if (!fresh) {
          // Stale factorization: refresh and retry this iteration.
          cache.mech.reset();
          rate = 0.0;
          continue;
        }
        throw SolverError("mechanics", "Newton line search failed", out.trace);
      }
      rate = r0 > 0.0 ? r1 / r0 : 0.0;
      out.trace.records.push_back({it, r0, lam * step.lpNorm<Eigen::Infinity>(), lam});
      x = std::move(trial);
    }
  };
  if (t == 0.0 && qm.isZero(0.0)) {
    // The momentum equation reduces to A w = 0, so w = 0 and rho = S(0).
    x.tail(fi.n).setZero();
    x.head(nc) = detail::pack(solve_continuity(g.faces(), mp, ap, K, g, opts, &rho_lag).rho);
    out.trace.converged = true;
  } else try {
    newton();
  } catch (const SolverError&) {
    // Restart once from a predictor: the Lame solve at the lagged density,
    // then rho = S(w).
    const Vec wp = detail::solve_sparse(ops.A, -momentum_load(r_lag, s, conv, t, ops, cons, K, qm),
                                        opts.linear_backend, opts.linear_solver_tol);
    const VectorField wf = detail::unpack_interior(wp, g);
    x.head(nc) = detail::pack(solve_continuity(wf, mp, ap, K, g, opts, &rho_lag).rho);
    x.tail(fi.n) = wp;
    cache.mech.reset();
    newton();
  }
  if (!out.trace.converged) throw SolverError("mechanics", "Newton iteration did not converge", out.trace);
  Vec r = x.head(nc);
  close_mass_identity(r, K, h, eps, qc);
  check_truncation_bound(r, K, "mechanics", out.trace);
  out.rho = detail::unpack_cells(r, g);
  out.w = detail::unpack_interior(x.tail(fi.n), g);
  out.mass_defect = mass_defect(r, K, h, eps, qc, g);
  out.max_excess = max_of(r) - K.k();
  return out;
}

}  // namespace nsf

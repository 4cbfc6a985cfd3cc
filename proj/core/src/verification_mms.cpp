#include <cmath>
#include <numbers>

#include "nsf/constitutive.hpp"
#include "nsf/verification.hpp"

namespace nsf::mms {

namespace {
constexpr double pi = std::numbers::pi;

void finish(OrderStudy& st) {
  for (std::size_t k = 1; k < st.errors.size(); ++k) {
    const double ratio = static_cast<double>(st.resolutions[k]) / st.resolutions[k - 1];
    st.orders.push_back(std::log(st.errors[k - 1] / st.errors[k]) / std::log(ratio));
  }
  st.observed_order = st.orders.empty() ? 0.0 : st.orders.back();
  st.passed = !st.orders.empty() && st.observed_order >= st.required_order;
}

// Face L2 error over interior faces.
double interior_face_error(const VectorField& a, const VectorField& b, const Grid& g) {
  double s = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) s += g.cell_area() * std::pow(a.u(i, j) - b.u(i, j), 2);
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) s += g.cell_area() * std::pow(a.v(i, j) - b.v(i, j), 2);
  return std::sqrt(s);
}
}  // namespace

double ContinuityCase::rho(Vec2 p) const { return h * (1.0 + 0.1 * std::cos(pi * p.x) * std::cos(pi * p.y)); }

Vec2 ContinuityCase::velocity(Vec2 p) const {
  return {0.5 * std::sin(pi * p.x) * std::cos(pi * p.y), -0.3 * std::cos(pi * p.x) * std::sin(pi * p.y)};
}

double ContinuityCase::forcing(Vec2 p) const {
  const double cx = std::cos(pi * p.x), sx = std::sin(pi * p.x);
  const double cy = std::cos(pi * p.y), sy = std::sin(pi * p.y);
  const double r = rho(p);
  const double rx = -0.1 * h * pi * sx * cy, ry = -0.1 * h * pi * cx * sy;
  const double lap = -0.2 * h * pi * pi * cx * cy;
  const Vec2 v = velocity(p);
  const double divv = 0.2 * pi * cx * cy;
  return epsilon * r - epsilon * lap + (v.x * rx + v.y * ry + r * divv) - epsilon * h;
}

Vec2 MomentumCase::w(Vec2 p) const {
  const double c = mu / f;
  return {std::sin(pi * p.x) * (p.y * (1.0 - p.y) + c), std::sin(pi * p.y) * (p.x * (1.0 - p.x) + c)};
}

Vec2 MomentumCase::forcing(Vec2 p) const {
  const double c = mu / f;
  const double sx = std::sin(pi * p.x), sy = std::sin(pi * p.y);
  const double uxx = -pi * pi * sx * (p.y * (1.0 - p.y) + c);
  const double uyy = -2.0 * sx;
  const double vxy = pi * std::cos(pi * p.y) * (1.0 - 2.0 * p.x);
  const double vyy = -pi * pi * sy * (p.x * (1.0 - p.x) + c);
  const double vxx = -2.0 * sy;
  const double uxy = pi * std::cos(pi * p.x) * (1.0 - 2.0 * p.y);
  return {-((2.0 * mu + lambda) * uxx + mu * uyy + (lambda + mu) * vxy),
          -((2.0 * mu + lambda) * vyy + mu * vxx + (lambda + mu) * uxy)};
}

double EntropyCase::s(Vec2 p) const { return 0.3 * std::sin(p.x + 0.5) * std::cos(0.7 * p.y) + 0.1; }

Vec2 EntropyCase::grad_s(Vec2 p) const {
  return {0.3 * std::cos(p.x + 0.5) * std::cos(0.7 * p.y), -0.21 * std::sin(p.x + 0.5) * std::sin(0.7 * p.y)};
}

double EntropyCase::lap_s(Vec2 p) const { return -0.3 * 1.49 * std::sin(p.x + 0.5) * std::cos(0.7 * p.y); }

double EntropyCase::forcing(Vec2 p) const {
  const Kirchhoff phi(epsilon, m);
  const double z = s(p);
  const Vec2 gs = grad_s(p);
  return -(phi.Phi_second(z) * dot(gs, gs) + phi.Phi_prime(z) * lap_s(p));
}

double EntropyCase::theta0(Vec2 p) const {
  Vec2 n{0.0, 0.0};
  if (p.y <= 1e-12) n = {0.0, -1.0};
  else if (p.y >= 1.0 - 1e-12) n = {0.0, 1.0};
  else if (p.x <= 1e-12) n = {-1.0, 0.0};
  else n = {1.0, 0.0};
  const Kirchhoff phi(epsilon, m);
  const double z = s(p), th = std::exp(z);
  const double L = 1.0 + std::pow(th, l);
  return th + (phi.Phi_prime(z) * dot(grad_s(p), n) + epsilon * z) / L;
}

OrderStudy continuity_study(const std::vector<int>& ns, const SolveOptions& base) {
  OrderStudy st{"continuity", ns, {}, {}, 0.0, 0.9, false};
  const ContinuityCase mc;
  for (int n : ns) {
    const Grid g(1.0, 1.0, n, n);
    ModelParams mp;
    mp.M = mc.h * g.area();
    ApproxParams ap;
    ap.epsilon = mc.epsilon;
    ap.k = mc.k;
    SolveOptions opts = base;
    opts.manufactured_forcing.continuity = sample_cells(g, [&](Vec2 p) { return mc.forcing(p); });
    VectorField v = sample_faces(g, [&](Vec2 p) { return mc.velocity(p); });
    impose_no_penetration(v, g);
    const auto res = solve_continuity(v, mp, ap, TruncationK(mc.k), g, opts);
    const ScalarField exact = sample_cells(g, [&](Vec2 p) { return mc.rho(p); });
    st.errors.push_back(l2_norm(res.rho - exact, g));
  }
  finish(st);
  return st;
}

OrderStudy momentum_study(const std::vector<int>& ns, const SolveOptions& base) {
  OrderStudy st{"momentum", ns, {}, {}, 0.0, 1.9, false};
  const MomentumCase mc;
  for (int n : ns) {
    const Grid g(1.0, 1.0, n, n);
    ModelParams mp;
    mp.mu = mc.mu;
    mp.lambda = mc.lambda;
    mp.f = mc.f;
    mp.M = g.area();
    SolveOptions opts = base;
    opts.manufactured_forcing.momentum = sample_faces(g, [&](Vec2 p) { return mc.forcing(p); });
    const auto res = solve_momentum(g.cells(1.0), g.cells(0.0), g.faces(), 1.0, mp, TruncationK(10.0), g, opts);
    const VectorField exact = sample_faces(g, [&](Vec2 p) { return mc.w(p); });
    st.errors.push_back(interior_face_error(res.w, exact, g));
  }
  finish(st);
  return st;
}

OrderStudy entropy_study(const std::vector<int>& ns, const SolveOptions& base) {
  OrderStudy st{"entropy", ns, {}, {}, 0.0, 1.9, false};
  const EntropyCase mc;
  for (int n : ns) {
    const Grid g(1.0, 1.0, n, n);
    ModelParams mp;
    mp.m = mc.m;
    mp.l = mc.l;
    mp.M = g.area();
    mp.theta0 = BoundaryTemperature([mc](Vec2 p) { return mc.theta0(p); }, 0.0, 0.0, "manufactured");
    ApproxParams ap;
    ap.epsilon = mc.epsilon;
    SolveOptions opts = base;
    opts.manufactured_forcing.entropy = sample_cells(g, [&](Vec2 p) { return mc.forcing(p); });
    const auto res = solve_entropy(g.cells(1.0), g.faces(), g.cells(0.0), 1.0, mp, ap, TruncationK(10.0), g, opts);
    const ScalarField exact = sample_cells(g, [&](Vec2 p) { return mc.s(p); });
    st.errors.push_back(l2_norm(res.s - exact, g));
  }
  finish(st);
  return st;
}

}  // namespace nsf::mms

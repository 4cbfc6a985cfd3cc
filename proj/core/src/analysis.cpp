#include "nsf/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "discrete.hpp"
#include "linear_solver.hpp"
#include "nsf/io.hpp"

namespace nsf {

using detail::SpMat;
using detail::Triplets;
using detail::Vec;

// ---------------------------------------------------------------------------
// Helmholtz decomposition

VectorField curl(const NodeField& psi, const Grid& g) {
  g.check(psi);
  VectorField out = g.faces();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) out.u(i, j) = (psi(i, j + 1) - psi(i, j)) / g.hy();
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) out.v(i, j) = -(psi(i + 1, j) - psi(i, j)) / g.hx();
  return out;
}

HelmholtzResult helmholtz_decompose(const VectorField& v, const Grid& g, const SolveOptions& opts) {
  g.check(v);
  const double vmax = std::max(max_abs(v.u.values()), max_abs(v.v.values()));
  const double flux = max_abs(normal_trace(v, g).values);
  if (flux > 1e-12 * std::max(vmax, 1.0))
    throw std::invalid_argument("helmholtz_decompose: boundary flux v.n is nonzero (max " + format_number(flux) +
                                "); the Neumann problem is incompatible");

  // Neumann Laplacian with the first cell pinned; compatible data makes the
  // pinned row redundant, and the mean is removed afterwards.
  const SpMat lap = detail::neumann_laplacian(g);
  Triplets t;
  for (int col = 0; col < lap.outerSize(); ++col)
    for (SpMat::InnerIterator it(lap, col); it; ++it)
      if (it.row() != 0) t.emplace_back(static_cast<int>(it.row()), col, it.value());
  t.emplace_back(0, 0, 1.0);
  SpMat a(lap.rows(), lap.cols());
  a.setFromTriplets(t.begin(), t.end());
  const ScalarField dv = div(v, g);
  Vec b = detail::pack(dv);
  b[0] = 0.0;
  Vec x = b.squaredNorm() == 0.0 ? Vec::Zero(b.size()) : detail::solve_sparse(a, b, opts.linear_backend, opts.linear_solver_tol);
  x.array() -= x.mean();

  HelmholtzResult out;
  out.phi = detail::unpack_cells(x, g);
  out.grad_phi = grad(out.phi, g);
  const VectorField rem = v - out.grad_phi;

  // Stream function by integrating u along each column from the bottom wall.
  out.psi = g.nodes();
  for (int i = 0; i <= g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) out.psi(i, j + 1) = out.psi(i, j) + g.hy() * rem.u(i, j);
  out.curl_psi = curl(out.psi, g);

  const double vn = l2_norm(v, g);
  const double err = l2_norm(v - out.grad_phi - out.curl_psi, g);
  out.reconstruction_error = vn > 0.0 ? err / vn : err;
  out.curl_divergence = max_abs(div(out.curl_psi, g).values());
  const ScalarField lp = div(out.grad_phi, g);
  out.poisson_residual = max_abs((lp - dv).values());
  return out;
}

// ---------------------------------------------------------------------------
// Shared discrete pieces

namespace {

double Kc(const TruncationK& K, double r) { return K.K(std::max(r, 0.0)); }

// Boundary values addressed by side and cell index along the side.
struct WallValues {
  std::vector<double> bottom, top, left, right;
  WallValues(const BoundaryField& b, const Grid& g)
      : bottom(g.nx()), top(g.nx()), left(g.ny()), right(g.ny()) {
    const auto& bf = g.boundary();
    for (std::size_t k = 0; k < bf.size(); ++k) {
      switch (bf[k].side) {
        case Side::Bottom: bottom[bf[k].i] = b.values[k]; break;
        case Side::Top: top[bf[k].i] = b.values[k]; break;
        case Side::Left: left[bf[k].j] = b.values[k]; break;
        case Side::Right: right[bf[k].j] = b.values[k]; break;
      }
    }
  }
};

// Cell-centered gradient using neighbours, or the wall trace half a cell away.
std::pair<ScalarField, ScalarField> cell_gradient(const ScalarField& q, const BoundaryField& qb, const Grid& g) {
  const WallValues w(qb, g);
  ScalarField gx = g.cells(), gy = g.cells();
  const double hx = g.hx(), hy = g.hy();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double west = i > 0 ? q(i - 1, j) : w.left[j];
      const double east = i < g.nx() - 1 ? q(i + 1, j) : w.right[j];
      const double dw = i > 0 ? hx : 0.5 * hx, de = i < g.nx() - 1 ? hx : 0.5 * hx;
      gx(i, j) = (east - west) / (dw + de);
      const double south = j > 0 ? q(i, j - 1) : w.bottom[i];
      const double north = j < g.ny() - 1 ? q(i, j + 1) : w.top[i];
      const double ds = j > 0 ? hy : 0.5 * hy, dn = j < g.ny() - 1 ? hy : 0.5 * hy;
      gy(i, j) = (north - south) / (ds + dn);
    }
  return {gx, gy};
}

// Sum over all faces (walls included, half a cell deep) of weight * c(s_f) * (ds/dn)^2.
template <class C>
double face_gradient_energy(const ScalarField& s, const BoundaryField& sb, const Grid& g, C&& coef) {
  const double hx = g.hx(), hy = g.hy();
  long double sum = 0.0L;
  auto add = [&](double a, double b, double dist, double weight) {
    const double d = (b - a) / dist;
    sum += weight * coef(0.5 * (a + b)) * d * d;
  };
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 1; i < g.nx(); ++i) add(s(i - 1, j), s(i, j), hx, hx * hy);
  for (int j = 1; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) add(s(i, j - 1), s(i, j), hy, hx * hy);
  const auto& bf = g.boundary();
  for (std::size_t k = 0; k < bf.size(); ++k) {
    const bool vertical = bf[k].side == Side::Left || bf[k].side == Side::Right;
    const double depth = 0.5 * (vertical ? hx : hy);
    add(s(bf[k].i, bf[k].j), sb.values[k], depth, depth * bf[k].length);
  }
  return static_cast<double>(sum);
}

std::vector<double> theta0_at_walls(const ModelParams& mp, const Grid& g) {
  std::vector<double> out;
  out.reserve(g.boundary().size());
  for (const auto& f : g.boundary()) out.push_back(mp.theta0(f.center));
  return out;
}

WallClosure slip_closure(const ModelParams& mp) { return WallClosure::slip(mp.mu, mp.f); }

}  // namespace

// ---------------------------------------------------------------------------
// Effective viscous flux

double default_eta(const ModelParams& mp) {
  const double eta = (mp.gamma - 3.0) / 6.0;
  if (!(eta > 0.0))
    throw std::domain_error("default eta = (gamma - 3)/6 is not positive for gamma = " + format_number(mp.gamma) +
                            "; set eta explicitly");
  return eta;
}

double gradient_exponent(double m) { return std::min(2.0, 3.0 * m / (m + 1.0)); }

ScalarField compute_evf(const State& st, const ModelParams& mp, const TruncationK& K, const Grid& g) {
  check_state(st, g);
  const Constitutive cons(mp, K);
  const ScalarField dv = div(st.v, g);
  ScalarField G = g.cells();
  for (std::size_t c = 0; c < G.size(); ++c)
    G[c] = -(2.0 * mp.mu + mp.lambda) * dv[c] + cons.P(std::max(st.rho[c], 0.0), std::exp(st.s[c]));
  return G;
}

GStats g_stats(const ScalarField& G, const ModelParams& mp, double k, double eta, const Grid& g) {
  g.check(G);
  if (!(eta > 0.0)) throw std::domain_error("g_stats: eta must be > 0");
  GStats out;
  out.eta = eta;
  out.max = max_abs(G.values());
  out.l2 = l2_norm(G, g);
  out.ratio = out.max / (1.0 + std::pow(k, 1.0 + 2.0 * mp.gamma / 3.0 + eta));
  if (k > 3.0) {
    out.condition = (k - 3.0) / k * std::pow(k - 3.0, mp.gamma) - out.max;
    out.condition_holds = out.condition >= 1.0;
  } else {
    out.condition = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Integrated balances

double energy_balance_residual(const State& st, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
                               const Grid& g) {
  check_state(st, g);
  const Constitutive cons(mp, K);
  const auto th0 = theta0_at_walls(mp, g);
  const auto& bf = g.boundary();
  long double wall = 0.0L;
  for (std::size_t k = 0; k < bf.size(); ++k) {
    const double sb = st.s_boundary.values[k], tb = std::exp(sb);
    wall += bf[k].length * (cons.L_coef(tb) * (tb - th0[k]) + ap.epsilon * sb);
  }
  const ScalarField diss = dissipation(st.v, mp.mu, mp.lambda, g, slip_closure(mp));
  const ScalarField dv = div(st.v, g);
  long double vol = 0.0L;
  for (std::size_t c = 0; c < diss.size(); ++c)
    vol += diss[c] - mp.a2 * K.int_K(std::max(st.rho[c], 0.0)) * std::exp(st.s[c]) * dv[c];
  vol *= g.cell_area();
  return static_cast<double>(std::abs(wall - vol));
}

double EntropyBalance::residual() const { return std::abs(lhs - rhs); }

EntropyBalance entropy_balance(const State& st, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
                               const Grid& g) {
  check_state(st, g);
  const Constitutive cons(mp, K);
  const Kirchhoff phi(ap.epsilon, mp.m, mp.a3);
  const auto th0 = theta0_at_walls(mp, g);
  const auto& bf = g.boundary();
  long double lhs = 0.0L;
  for (std::size_t k = 0; k < bf.size(); ++k) {
    const double sb = st.s_boundary.values[k], tb = std::exp(sb);
    lhs += bf[k].length * (cons.L_coef(tb) * (tb - th0[k]) / tb + ap.epsilon * sb * std::exp(-sb));
  }
  const ScalarField adv_s = advective_derivative(st.v, st.s, g);
  const ScalarField adv_r = advective_derivative(st.v, st.rho, g);
  const ScalarField diss = dissipation(st.v, mp.mu, mp.lambda, g, slip_closure(mp));
  long double transport = 0.0L, heat = 0.0L;
  for (std::size_t c = 0; c < diss.size(); ++c) {
    const double r = std::max(st.rho[c], 0.0), kc = Kc(K, r);
    transport += kc * r * adv_s[c] - kc * adv_r[c];
    heat += diss[c] * std::exp(-st.s[c]);
  }
  lhs += mp.a2 * transport * g.cell_area();
  const double conduction =
      face_gradient_energy(st.s, st.s_boundary, g, [&](double z) { return phi.Phi_prime(z) * std::exp(-z); });
  EntropyBalance out;
  out.lhs = static_cast<double>(lhs);
  out.rhs = static_cast<double>(heat * g.cell_area()) + conduction;
  // Both integrands are nonnegative; a negative total means a broken state.
  if (out.rhs < -1e-14 * std::max(1.0, conduction))
    throw std::logic_error("entropy balance: production term is negative (" + format_number(out.rhs) + ")");
  return out;
}

double entropy_balance_residual(const State& st, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
                                const Grid& g) {
  return entropy_balance(st, mp, ap, K, g).residual();
}

// ---------------------------------------------------------------------------
// Norm panel

std::vector<std::pair<std::string, double>> NormPanel::entries() const {
  return {{"v_h1", v_h1},
          {"kr_l2gamma", kr_l2gamma},
          {"pressure_l2", pressure_l2},
          {"theta_l3m", theta_l3m},
          {"grad_theta_lr", grad_theta_lr},
          {"grad_s_l2", grad_s_l2},
          {"boundary_exp_s", boundary_exp_s}};
}

NormPanel norm_panel(const State& st, const ModelParams& mp, const TruncationK& K, const Grid& g) {
  check_state(st, g);
  const Constitutive cons(mp, K);
  const int nx = g.nx(), ny = g.ny();
  const double hx = g.hx(), hy = g.hy();
  NormPanel out;

  // H1: face l2 norm plus the squared velocity gradient. Normal derivatives
  // live at cells, tangential ones at nodes with the slip ghost at walls.
  const WallClosure wc = slip_closure(mp);
  const double rx = wc.slip_ratio(hx), ry = wc.slip_ratio(hy);
  long double grad2 = 0.0L;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double ux = (st.v.u(i + 1, j) - st.v.u(i, j)) / hx;
      const double vy = (st.v.v(i, j + 1) - st.v.v(i, j)) / hy;
      grad2 += g.cell_area() * (ux * ux + vy * vy);
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      double uy = 0.0, vx = 0.0;
      if (j == 0) uy = st.v.u(i, 0) * (1.0 - ry) / hy;
      else if (j == ny) uy = st.v.u(i, ny - 1) * (ry - 1.0) / hy;
      else uy = (st.v.u(i, j) - st.v.u(i, j - 1)) / hy;
      if (i == 0) vx = st.v.v(0, j) * (1.0 - rx) / hx;
      else if (i == nx) vx = st.v.v(nx - 1, j) * (rx - 1.0) / hx;
      else vx = (st.v.v(i, j) - st.v.v(i - 1, j)) / hx;
      grad2 += g.node_weight(i, j) * (uy * uy + vx * vx);
    }
  const double vl2 = l2_norm(st.v, g);
  out.v_h1 = std::sqrt(vl2 * vl2 + static_cast<double>(grad2));

  ScalarField kr = g.cells(), p = g.cells(), th = g.cells();
  for (std::size_t c = 0; c < kr.size(); ++c) {
    const double r = std::max(st.rho[c], 0.0);
    th[c] = std::exp(st.s[c]);
    kr[c] = Kc(K, r) * r;
    p[c] = cons.P(r, th[c]);
  }
  out.kr_l2gamma = lp_norm(kr, g, 2.0 * mp.gamma);
  out.pressure_l2 = lp_norm(p, g, 2.0);
  out.theta_l3m = lp_norm(th, g, 3.0 * mp.m);

  out.r = gradient_exponent(mp.m);
  ScalarField mag = g.cells();
  {
    const auto [gx, gy] = cell_gradient(th, st.theta_boundary(), g);
    for (std::size_t c = 0; c < mag.size(); ++c) mag[c] = std::hypot(gx[c], gy[c]);
    out.grad_theta_lr = lp_norm(mag, g, out.r);
  }
  {
    const auto [gx, gy] = cell_gradient(st.s, st.s_boundary, g);
    for (std::size_t c = 0; c < mag.size(); ++c) mag[c] = std::hypot(gx[c], gy[c]);
    out.grad_s_l2 = lp_norm(mag, g, 2.0);
  }
  BoundaryField e = st.s_boundary;
  for (double& z : e.values) z = std::exp(z) + std::exp(-z);
  out.boundary_exp_s = boundary_integrate(e, g);
  return out;
}

double overshoot_measure(const ScalarField& rho, double k, const Grid& g) {
  g.check(rho);
  if (!(k > 3.0)) throw std::domain_error("overshoot_measure: k must exceed 3 (got " + format_number(k) + ")");
  std::size_t over = 0;
  for (double r : rho.values())
    if (r > k - 3.0) ++over;
  return static_cast<double>(over) / static_cast<double>(rho.size());
}

DiagnosticsReport diagnose(const State& st, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
                           const Grid& g, std::optional<double> eta) {
  DiagnosticsReport out;
  out.panel = norm_panel(st, mp, K, g);
  out.energy_residual = energy_balance_residual(st, mp, ap, K, g);
  const EntropyBalance eb = entropy_balance(st, mp, ap, K, g);
  out.entropy_residual = eb.residual();
  out.entropy_rhs = eb.rhs;
  out.g = g_stats(compute_evf(st, mp, K, g), mp, K.k(), eta ? *eta : default_eta(mp), g);
  out.overshoot = K.k() > 3.0 ? overshoot_measure(st.rho, K.k(), g) : std::numeric_limits<double>::quiet_NaN();
  const auto [mn, mx] = std::minmax_element(st.rho.values().begin(), st.rho.values().end());
  out.rho_min = *mn;
  out.rho_max = *mx;
  double tmin = std::numeric_limits<double>::infinity();
  for (double z : st.s.values()) tmin = std::min(tmin, std::exp(z));
  for (double z : st.s_boundary.values) tmin = std::min(tmin, std::exp(z));
  out.theta_min = tmin;
  out.truncation_inactive = out.rho_max <= K.k();
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

bool SweepReport::all_converged() const {
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.converged; });
}

std::vector<std::string> SweepReport::csv_columns(SweepParameter p) {
  std::vector<std::string> cols{p == SweepParameter::Epsilon ? "epsilon" : "k"};
  for (const auto& [name, v] : NormPanel{}.entries()) cols.push_back(name);
  for (const char* c : {"energy_residual", "entropy_residual", "residual_continuity", "residual_momentum",
                        "residual_entropy", "G_max", "G_l2", "G_ratio", "eta", "G_condition", "G_condition_holds",
                        "overshoot", "rho_max", "K_identity", "final_stage_iterations", "total_iterations",
                        "restarts", "status"})
    cols.emplace_back(c);
  return cols;
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  const auto cols = csv_columns(parameter);
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << '\n';
  for (const SweepRow& r : rows) {
    const DiagnosticsReport& d = r.diagnostics;
    os << format_number(r.value);
    for (const auto& [name, v] : d.panel.entries()) os << ',' << format_number(v);
    for (double x : {d.energy_residual, d.entropy_residual, r.residuals.continuity, r.residuals.momentum,
                     r.residuals.entropy, d.g.max, d.g.l2, d.g.ratio, d.g.eta, d.g.condition})
      os << ',' << format_number(x);
    os << ',' << (d.g.condition_holds ? "true" : "false") << ',' << format_number(d.overshoot) << ','
       << format_number(d.rho_max) << ',' << (d.truncation_inactive ? "true" : "false") << ','
       << r.final_stage_iterations << ',' << r.total_iterations << ',' << r.restarts << ',' << r.status << '\n';
  }
  return os.str();
}

namespace {

void check_sweep_values(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep: value list is empty");
  for (double x : values)
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("sweep: values must be positive and finite");
  if (values.size() < 2) return;
  const bool up = values[1] > values[0];
  for (std::size_t k = 1; k < values.size(); ++k) {
    const bool ok = up ? values[k] > values[k - 1] : values[k] < values[k - 1];
    if (!ok) throw std::invalid_argument("sweep: values must be strictly increasing or strictly decreasing");
  }
}

}  // namespace

SweepReport sweep(const SweepSetup& setup, SweepParameter p, const std::vector<double>& values) {
  check_sweep_values(values);
  SweepReport rep;
  rep.parameter = p;
  std::optional<State> prev;
  const Grid& g = setup.grid;

  ContinuationSchedule warm = setup.schedule;
  warm.t_steps = {1.0};
  warm.tolerance = setup.schedule.tolerance_for(1.0);
  warm.stage_tolerances.clear();

  for (double value : values) {
    ModelParams mp = setup.model;
    ApproxParams ap = setup.approx;
    (p == SweepParameter::Epsilon ? ap.epsilon : ap.k) = value;
    SweepRow row;
    row.value = value;
    const auto t0 = std::chrono::steady_clock::now();
    State best = rest_state(g, mean_density(mp, g));
    try {
      const TruncationK K(ap.k);
      auto run = [&](const State& init, const ContinuationSchedule& sc) {
        CoupledSolution sol = solve_coupled(init, sc, mp, ap, K, g, setup.solver);
        row.total_iterations += sol.report.total_iterations;
        row.restarts += static_cast<int>(sol.report.restarts.size());
        return sol;
      };
      CoupledSolution sol;
      bool cold = false;
      if (prev && !setup.independent_starts) {
        sol = run(*prev, warm);
        if (!sol.report.converged) {
          row.failure = "warm start: " + sol.report.failure + "; ";
          cold = true;
          sol = run(rest_state(g, mean_density(mp, g)), setup.schedule);
        }
      } else {
        sol = run(rest_state(g, mean_density(mp, g)), setup.schedule);
      }
      row.converged = sol.report.converged;
      row.status = row.converged ? (cold ? "converged-cold" : "converged") : "failed";
      if (!row.converged) row.failure += sol.report.failure;
      row.residuals = sol.report.final_residuals;
      row.final_stage_iterations = sol.report.final_stage_iterations();
      row.diagnostics = diagnose(sol.state, mp, ap, K, g, setup.eta);
      best = std::move(sol.state);
      if (row.converged) prev = best;
    } catch (const std::exception& e) {
      row.converged = false;
      row.status = "failed";
      row.failure += e.what();
    }
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.rows.push_back(std::move(row));
    rep.states.push_back(std::move(best));
  }
  return rep;
}

SweepReport sweep_epsilon(const SweepSetup& setup, const std::vector<double>& values) {
  return sweep(setup, SweepParameter::Epsilon, values);
}

SweepReport sweep_k(const SweepSetup& setup, const std::vector<double>& values) {
  return sweep(setup, SweepParameter::K, values);
}

}  // namespace nsf

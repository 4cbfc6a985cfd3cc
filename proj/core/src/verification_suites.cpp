#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "nsf/analysis.hpp"
#include "nsf/config.hpp"
#include "nsf/io.hpp"
#include "nsf/verification.hpp"

namespace nsf::verify {

std::vector<mms::OrderStudy> run_mms_suite() {
  return {mms::continuity_study(), mms::momentum_study(), mms::entropy_study()};
}

namespace {

constexpr double pi = std::numbers::pi;

// Random smooth velocity with v.n = 0: a few low Fourier modes per component,
// sin in the normal direction so the wall values vanish.
VectorField random_velocity(std::mt19937_64& rng, const Grid& g, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
  VectorField v = sample_faces(g, [&](Vec2 p) {
    const double x = p.x / g.lx(), y = p.y / g.ly();
    return Vec2{scale * (a * std::sin(pi * x) * std::cos(pi * y) + b * std::sin(2 * pi * x) * y),
                scale * (c * std::sin(pi * y) * std::cos(2 * pi * x) + d * std::sin(pi * y) * x)};
  });
  impose_no_penetration(v, g);
  return v;
}

ScalarField random_cells(std::mt19937_64& rng, const Grid& g, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  ScalarField s = g.cells();
  for (double& x : s.raw()) x = u(rng);
  return s;
}

struct Suite {
  std::vector<PropertyCheck> checks;
  void run(const std::string& name, const std::function<std::string()>& body) {
    PropertyCheck c{name, false, ""};
    try {
      c.detail = body();
      c.passed = c.detail.rfind("FAIL", 0) != 0;
    } catch (const std::exception& e) {
      c.detail = std::string("exception: ") + e.what();
    }
    checks.push_back(std::move(c));
  }
};

std::string verdict(bool ok, const std::string& detail) { return (ok ? "" : "FAIL: ") + detail; }

}  // namespace

std::vector<PropertyCheck> run_invariants_suite() {
  Suite s;
  std::mt19937_64 rng(20240611);

  s.run("m threshold at gamma=4 is 11/5 and strict", [] {
    const double th = threshold_m(4.0);
    ModelParams mp;
    mp.m = 11.0 / 5.0;
    const bool rejected = !validate_params(mp).admissible(ValidationMode::Strict);
    return verdict(th == 11.0 / 5.0 && rejected, "threshold " + format_number(th));
  });

  s.run("truncation K is a monotone cutoff in [0,1]", [&] {
    std::uniform_real_distribution<double> kd(2.0, 30.0);
    for (int trial = 0; trial < 50; ++trial) {
      const TruncationK K(kd(rng));
      double prev = 1.0;
      for (int n = 0; n <= 400; ++n) {
        const double r = (K.k() + 2.0) * n / 400.0, v = K.K(r);
        if (v < 0.0 || v > 1.0 || v > prev + 1e-15) return verdict(false, "K(" + format_number(r) + ") = " + format_number(v));
        prev = v;
      }
    }
    return verdict(true, "50 random k");
  });

  s.run("continuity: positivity, truncation cap and mass identity", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 12; ++trial) {
      const Grid g(1.0, 1.0, 16, 16);
      ModelParams mp;
      ApproxParams ap;
      // The upwind scheme keeps rho <= k+1 only while |v| is within a few
      // multiples of epsilon (a cell above the cap still takes inflow from
      // its upstream neighbour), so the speed scales with epsilon.
      std::uniform_real_distribution<double> ed(-2.5, -0.5), sd(0.5, 5.0);
      ap.epsilon = std::pow(10.0, ed(rng));
      const TruncationK K(ap.k);
      const auto res =
          solve_continuity(random_velocity(rng, g, ap.epsilon * sd(rng)), mp, ap, K, g, SolveOptions{});
      double mn = 1e300, mx = -1e300;
      for (double r : res.rho.values()) mn = std::min(mn, r), mx = std::max(mx, r);
      worst = std::max(worst, res.mass_defect);
      if (mn < -1e-12 || mx > ap.k + 1.0 || res.mass_defect > 1e-12 || integrate(res.rho, g) > mp.M + 1e-12)
        return verdict(false, "trial " + std::to_string(trial) + ": min " + format_number(mn) + ", defect " +
                                  format_number(res.mass_defect));
    }
    return verdict(true, "worst mass defect " + format_number(worst));
  });

  s.run("rest state is a fixed point of T", [] {
    const Grid g(1.0, 1.0, 16, 16);
    const ModelParams mp;
    const ApproxParams ap;
    const State rest = rest_state(g, mean_density(mp, g));
    double worst = 0.0;
    for (double t : {0.0, 0.5, 1.0}) {
      const State y = apply_T(rest, t, mp, ap, TruncationK(ap.k), g, SolveOptions{});
      worst = std::max({worst, max_abs((y.rho - rest.rho).values()), max_abs(y.v.u.values()), max_abs(y.v.v.values()),
                        max_abs(y.s.values()), max_abs(y.s_boundary.values)});
    }
    return verdict(worst <= 1e-12, "max deviation " + format_number(worst));
  });

  s.run("T at t=0 returns (S(v), 0, 0)", [&] {
    const Grid g(1.0, 1.0, 16, 16);
    const ModelParams mp;
    const ApproxParams ap;
    const TruncationK K(ap.k);
    State st{random_cells(rng, g, 0.5, 1.5), random_velocity(rng, g, 1.0), random_cells(rng, g, -0.3, 0.3),
             g.boundary_field(0.1)};
    const State y = apply_T(st, 0.0, mp, ap, K, g, SolveOptions{});
    const double w = std::max(max_abs(y.v.u.values()), max_abs(y.v.v.values()));
    const double z = std::max(max_abs(y.s.values()), max_abs(y.s_boundary.values));
    const double r = max_abs((y.rho - solve_continuity(g.faces(), mp, ap, K, g, SolveOptions{}).rho).values());
    return verdict(w == 0.0 && z <= 1e-14 && r <= 1e-12,
                   "|w| " + format_number(w) + ", |z| " + format_number(z) + ", |rho - h| " + format_number(r));
  });

  s.run("Helmholtz reconstruction and idempotence", [&] {
    double worst = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
      const Grid g(1.0, 1.5, 24, 20);
      const VectorField v = random_velocity(rng, g, 1.0);
      const HelmholtzResult h = helmholtz_decompose(v, g);
      const HelmholtzResult h2 = helmholtz_decompose(h.grad_phi, g);
      const double idem = l2_norm(h2.phi - h.phi, g) / std::max(l2_norm(h.phi, g), 1e-300);
      worst = std::max({worst, h.reconstruction_error, idem, std::abs(integrate(h.phi, g))});
      if (h.curl_divergence > 1e-10) return verdict(false, "div curl psi " + format_number(h.curl_divergence));
    }
    return verdict(worst <= 1e-10, "worst " + format_number(worst));
  });

  s.run("rest state diagnostics: balances vanish, G constant", [] {
    const Grid g(1.0, 1.0, 16, 16);
    const ModelParams mp;
    const ApproxParams ap;
    const TruncationK K(ap.k);
    const State rest = rest_state(g, mean_density(mp, g));
    const DiagnosticsReport d = diagnose(rest, mp, ap, K, g);
    const ScalarField G = compute_evf(rest, mp, K, g);
    const auto [mn, mx] = std::minmax_element(G.values().begin(), G.values().end());
    const double spread = *mx - *mn;
    return verdict(d.energy_residual <= 1e-12 && d.entropy_residual <= 1e-12 && spread <= 1e-12,
                   "energy " + format_number(d.energy_residual) + ", entropy " + format_number(d.entropy_residual) +
                       ", G spread " + format_number(spread));
  });

  s.run("overshoot measure is nonincreasing in k", [&] {
    const Grid g(1.0, 1.0, 16, 16);
    for (int trial = 0; trial < 20; ++trial) {
      const ScalarField rho = random_cells(rng, g, 0.0, 20.0);
      double prev = 2.0;
      for (double k = 3.5; k < 25.0; k += 0.75) {
        const double m = overshoot_measure(rho, k, g);
        if (m > prev || m < 0.0 || m > 1.0) return verdict(false, "k " + format_number(k));
        prev = m;
      }
    }
    return verdict(true, "20 random densities");
  });

  s.run("norm panel L^p entries are absolutely homogeneous", [&] {
    const Grid g(1.0, 1.0, 12, 12);
    const ModelParams mp;
    for (double p : {2.0, 2.0 * mp.gamma, 3.0 * mp.m}) {
      const ScalarField f = random_cells(rng, g, -2.0, 2.0);
      const double c = -3.7;
      const double lhs = lp_norm(c * f, g, p), rhs = std::abs(c) * lp_norm(f, g, p);
      if (std::abs(lhs - rhs) > 1e-13 * rhs) return verdict(false, "p " + format_number(p));
    }
    return verdict(true, "p in {2, 2 gamma, 3 m}");
  });

  s.run("numbers and states round-trip through text", [&] {
    std::uniform_real_distribution<double> e(-300.0, 300.0);
    for (int trial = 0; trial < 2000; ++trial) {
      const double x = std::pow(10.0, e(rng)) * (trial % 2 ? -1.0 : 1.0);
      if (parse_number(format_number(x)) != x) return verdict(false, format_number(x));
    }
    const Grid g(1.0, 1.0, 6, 5);
    const State st{random_cells(rng, g, 0.0, 2.0), random_velocity(rng, g, 1.0), random_cells(rng, g, -1.0, 1.0),
                   g.boundary_field(0.25)};
    std::stringstream ss;
    write_state(ss, st, g);
    const StateFile back = read_state(ss);
    return verdict(back.state == st && back.grid == g, "2000 numbers, one state");
  });

  s.run("configuration round-trips", [] {
    RunConfig c;
    c.force = {"fourier1", {{"amplitude", 0.1}, {"wavenumber", 1.0}}};
    c.schedule.t_steps = {0.0, 0.3, 1.0};
    c.output.sweep_epsilon = {0.1, 0.01};
    c.eta = 0.125;
    std::istringstream in(serialize_config(c));
    return verdict(parse_config(in) == c, "serialize -> parse");
  });

  return s.checks;
}

}  // namespace nsf::verify

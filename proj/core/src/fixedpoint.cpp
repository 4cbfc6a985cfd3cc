#include "nsf/fixedpoint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>

namespace nsf {

void ContinuationSchedule::validate() const {
  if (t_steps.empty()) throw std::invalid_argument("schedule.t_steps must not be empty");
  for (std::size_t k = 0; k < t_steps.size(); ++k) {
    if (!(t_steps[k] >= 0.0 && t_steps[k] <= 1.0))
      throw std::invalid_argument("schedule.t_steps entries must lie in [0, 1]");
    if (k > 0 && !(t_steps[k] > t_steps[k - 1]))
      throw std::invalid_argument("schedule.t_steps must be strictly increasing");
  }
  if (t_steps.back() != 1.0) throw std::invalid_argument("schedule.t_steps must end at 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("schedule.damping must lie in (0, 1]");
  if (!(tolerance > 0.0)) throw std::invalid_argument("schedule.tolerance must be > 0");
  if (!stage_tolerances.empty() && stage_tolerances.size() != t_steps.size())
    throw std::invalid_argument("schedule.stage_tolerances must have one entry per t step");
  for (double tol : stage_tolerances)
    if (!(tol > 0.0)) throw std::invalid_argument("schedule.stage_tolerances entries must be > 0");
  if (max_outer < 1) throw std::invalid_argument("schedule.max_outer must be >= 1");
  if (!(restart.min_t_step > 0.0)) throw std::invalid_argument("schedule.min_t_step must be > 0");
  if (restart.max_restarts < 0) throw std::invalid_argument("schedule.max_restarts must be >= 0");
  if (!(restart.min_damping > 0.0 && restart.min_damping <= 1.0))
    throw std::invalid_argument("schedule.min_damping must lie in (0, 1]");
}

double ContinuationSchedule::tolerance_for(double t) const {
  if (stage_tolerances.empty()) return tolerance;
  // Inserted restart stages use the tolerance of the next scheduled stage.
  for (std::size_t k = 0; k < t_steps.size(); ++k)
    if (t <= t_steps[k]) return stage_tolerances[k];
  return stage_tolerances.back();
}

double OuterRecord::max_update() const { return std::max({update_rho, update_v, update_s}); }
double OuterRecord::max_residual() const {
  return std::max({residual_continuity, residual_momentum, residual_entropy});
}

int FixedPointReport::final_stage_iterations() const {
  for (auto it = stages.rbegin(); it != stages.rend(); ++it)
    if (it->converged) return it->iterations;
  return stages.empty() ? 0 : stages.back().iterations;
}

State apply_T(const State& st, double t, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
              const Grid& g, const SolveOptions& opts, MapVariant map, SolverWorkspace* ws) {
  check_state(st, g);
  State out;
  if (map == MapVariant::Joint) {
    auto mech = solve_mechanics(st.rho, st.s, st.v, t, mp, ap, K, g, opts, ws, &st.v);
    out.rho = std::move(mech.rho);
    out.v = std::move(mech.w);
  } else {
    out.rho = solve_continuity(st.v, mp, ap, K, g, opts, &st.rho).rho;
    out.v = solve_momentum(out.rho, st.s, st.v, t, mp, K, g, opts).w;
  }
  auto ent = solve_entropy(out.rho, st.v, st.s, t, mp, ap, K, g, opts, &st.s, &st.s_boundary);
  out.s = std::move(ent.s);
  out.s_boundary = std::move(ent.s_boundary);
  return out;
}

namespace {

double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double a : x) s += a * a;
  return std::sqrt(s / static_cast<double>(x.size()));
}

double rms_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return a.empty() ? 0.0 : std::sqrt(s / static_cast<double>(a.size()));
}

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<double> velocity_values(const VectorField& v) { return concat(v.u.raw(), v.v.raw()); }
std::vector<double> entropy_values(const State& st) { return concat(st.s.raw(), st.s_boundary.values); }

// Field scales used to make the update and residual measures relative. The
// velocity floor keeps round-off noise of a state at rest from reading as a
// large relative change.
constexpr double kVelocityFloor = 1e-6;

struct Scales {
  double rho, v, s;
};

Scales scales_of(const State& st) {
  return {std::max(rms(st.rho.raw()), 1e-300), std::max(rms(velocity_values(st.v)), kVelocityFloor),
          std::max(rms(entropy_values(st)), 1.0)};
}

template <class A>
A blend(const A& x, const A& y, double a) {
  return (1.0 - a) * x + a * y;
}

BoundaryField blend(const BoundaryField& x, const BoundaryField& y, double a) {
  BoundaryField out = x;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = (1.0 - a) * x.values[k] + a * y.values[k];
  return out;
}

bool state_finite(const State& st) {
  return all_finite(st.rho.raw()) && all_finite(st.v.u.raw()) && all_finite(st.v.v.raw()) &&
         all_finite(st.s.raw()) && all_finite(st.s_boundary.values);
}

struct NonFinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StageOutcome { Converged, NotConverged, Overflow, Failed };

struct StageRun {
  StageOutcome outcome = StageOutcome::NotConverged;
  State state;
  StageReport report;
};

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

class Driver {
 public:
  Driver(const ContinuationSchedule& sc, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
         const Grid& g, const SolveOptions& opts, FixedPointReport& rep)
      : sc_(sc), mp_(mp), ap_(ap), K_(K), g_(g), opts_(opts), rep_(rep) {}

  StageRun run_stage(const State& start, double t, double alpha) {
    StageRun run;
    run.state = start;
    run.report.t = t;
    run.report.damping = alpha;
    run.report.tolerance = sc_.tolerance_for(t);
    const double tol = run.report.tolerance;
    try {
      State& x = run.state;
      for (int it = 1; it <= sc_.max_outer; ++it) {
        const State y = apply_T(x, t, mp_, ap_, K_, g_, opts_, sc_.map, &ws_);
        if (!state_finite(y)) throw NonFinite("map produced non-finite values");
        OuterRecord rec;
        rec.iteration = it;
        rec.damping = alpha;
        const Scales sy = scales_of(y);
        rec.update_rho = rms_diff(y.rho.raw(), x.rho.raw()) / sy.rho;
        rec.update_v = rms_diff(velocity_values(y.v), velocity_values(x.v)) / sy.v;
        rec.update_s = rms_diff(entropy_values(y), entropy_values(x)) / sy.s;

        State nx;
        nx.v = blend(x.v, y.v, alpha);
        impose_no_penetration(nx.v, g_);
        nx.s = blend(x.s, y.s, alpha);
        nx.s_boundary = blend(x.s_boundary, y.s_boundary, alpha);
        if (alpha == 1.0 && sc_.map == MapVariant::Joint) {
          nx.rho = y.rho;
          note_mass(mass_identity_defect(nx.rho, mp_, ap_, K_, g_, opts_));
        } else {
          auto c = solve_continuity(nx.v, mp_, ap_, K_, g_, opts_, &y.rho);
          note_mass(c.mass_defect);
          nx.rho = std::move(c.rho);
        }
        if (!state_finite(nx)) throw NonFinite("damped iterate is non-finite");

        const Scales sx = scales_of(nx);
        const CoupledResiduals cr = coupled_residuals(nx, t, mp_, ap_, K_, g_, opts_);
        rec.residual_continuity = cr.continuity / sx.rho;
        rec.residual_momentum = cr.momentum / sx.v;
        rec.residual_entropy = cr.entropy / sx.s;
        rec.mass = integrate(nx.rho, g_);
        rep_.max_mass_excess = std::max(rep_.max_mass_excess, rec.mass - mp_.M);
        if (!std::isfinite(rec.max_update()) || !std::isfinite(rec.max_residual()))
          throw NonFinite("convergence measures are non-finite");

        x = std::move(nx);
        run.report.history.push_back(rec);
        run.report.iterations = it;
        ++rep_.total_iterations;
        if (rec.max_update() <= tol && rec.max_residual() <= tol) {
          run.outcome = StageOutcome::Converged;
          run.report.converged = true;
          run.report.message = "converged";
          return run;
        }
        // The t = 0 map is constant: the second application has zero update
        // unless the first one failed the residual test, and a third cannot help.
        if (t == 0.0 && alpha == 1.0 && it >= 2) break;
      }
      run.report.message = "no convergence in " + std::to_string(run.report.iterations) + " outer iterations";
    } catch (const PhiOverflow& e) {
      run.outcome = StageOutcome::Overflow;
      run.report.message = std::string("overflow: ") + e.what();
    } catch (const NonFinite& e) {
      run.outcome = StageOutcome::Overflow;
      run.report.message = std::string("non-finite: ") + e.what();
    } catch (const std::exception& e) {
      run.outcome = StageOutcome::Failed;
      run.report.message = std::string("sub-solver failure: ") + e.what();
    }
    return run;
  }

  void reset_workspace() { ws_.reset(); }

 private:
  void note_mass(double d) { rep_.max_mass_defect = std::max(rep_.max_mass_defect, d); }

  const ContinuationSchedule& sc_;
  const ModelParams& mp_;
  const ApproxParams& ap_;
  const TruncationK& K_;
  const Grid& g_;
  const SolveOptions& opts_;
  FixedPointReport& rep_;
  SolverWorkspace ws_;
};

}  // namespace

CoupledSolution solve_coupled(const State& initial, const ContinuationSchedule& schedule, const ModelParams& mp,
                              const ApproxParams& ap, const TruncationK& K, const Grid& g, const SolveOptions& opts,
                              const CheckpointFn& checkpoint) {
  schedule.validate();
  opts.validate();
  validate_approx(ap, mean_density(mp, g));
  check_state(initial, g);
  const auto t0 = std::chrono::steady_clock::now();

  CoupledSolution out;
  FixedPointReport& rep = out.report;
  rep.rho_sequencing = schedule.map == MapVariant::Joint
                           ? "joint: rho = S(w) solved with the momentum equation; re-evaluated as S(v) after damping"
                           : "sequential: rho = S(v) before the momentum solve; re-evaluated as S(v) after damping";
  Driver drv(schedule, mp, ap, K, g, opts, rep);

  State accepted = initial;
  std::vector<double> targets = schedule.t_steps;
  std::size_t idx = 0;
  std::optional<double> t_prev;
  double alpha = schedule.damping;
  int restarts = 0;

  while (idx < targets.size()) {
    const double t = targets[idx];
    const double a = t == 0.0 ? 1.0 : alpha;
    StageRun run = drv.run_stage(accepted, t, a);
    rep.stages.push_back(run.report);
    if (run.outcome == StageOutcome::Converged) {
      accepted = std::move(run.state);
      if (checkpoint) checkpoint(t, accepted);
      t_prev = t;
      ++idx;
      continue;
    }

    std::string fail = "stage t=" + num(t) + " (damping " + num(a) + "): " + run.report.message;
    if (restarts >= schedule.restart.max_restarts) {
      rep.failure = fail + "; restart budget exhausted";
      break;
    }
    const bool overflow = run.outcome == StageOutcome::Overflow;
    const bool can_halve_damping = t != 0.0 && alpha / 2.0 >= schedule.restart.min_damping;
    const bool can_split = t_prev && (t - *t_prev) / 2.0 >= schedule.restart.min_t_step;
    drv.reset_workspace();
    if (overflow && can_halve_damping) {
      alpha /= 2.0;
      rep.restarts.push_back(fail + " -> damping halved to " + num(alpha));
    } else if (can_split) {
      const double mid = *t_prev + (t - *t_prev) / 2.0;
      targets.insert(targets.begin() + static_cast<std::ptrdiff_t>(idx), mid);
      rep.restarts.push_back(fail + " -> inserted stage t=" + num(mid));
    } else if (can_halve_damping) {
      alpha /= 2.0;
      rep.restarts.push_back(fail + " -> damping halved to " + num(alpha));
    } else {
      rep.failure = fail + "; no restart option left (t step and damping at their floors)";
      break;
    }
    ++restarts;
  }

  rep.converged = rep.failure.empty();
  out.state = std::move(accepted);
  try {
    rep.final_residuals = coupled_residuals(out.state, t_prev.value_or(0.0), mp, ap, K, g, opts);
  } catch (const std::exception& e) {
    rep.failure += std::string(rep.failure.empty() ? "" : "; ") + "final residuals unavailable: " + e.what();
    rep.converged = false;
  }
  if (rep.converged && t_prev != 1.0) {
    rep.converged = false;
    rep.failure = "schedule did not reach t=1";
  }
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace nsf

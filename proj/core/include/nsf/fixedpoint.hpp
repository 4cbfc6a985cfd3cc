#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nsf/subsolvers.hpp"

namespace nsf {

// How one application of the map T obtains (rho, w).
//   Joint:      rho = S(w) and the Lame solve are solved together by Newton,
//               so the pressure sees the density of the new velocity.
//   Sequential: rho = S(v) from the current iterate, then the Lame solve.
// Sequential is the literal composition; its linearized gain grows like 1/eps
// and the damped iteration diverges for small eps (see README).
enum class MapVariant { Joint, Sequential };

struct RestartPolicy {
  double min_t_step = 1.0 / 64.0;
  int max_restarts = 8;
  double min_damping = 1.0 / 64.0;
};

struct ContinuationSchedule {
  std::vector<double> t_steps{0.0, 0.25, 0.5, 0.75, 1.0};
  double damping = 0.5;
  double tolerance = 1e-9;
  std::vector<double> stage_tolerances;  // optional per-stage override
  int max_outer = 300;
  RestartPolicy restart;
  MapVariant map = MapVariant::Joint;

  void validate() const;
  double tolerance_for(double t) const;
};

// Per-field convergence measures. Updates are relative l2 norms of
// T(x) - x; residuals are the Jacobi-scaled RMS residuals divided by the
// same field scale (RMS density, RMS velocity, max(1, RMS entropy)).
struct OuterRecord {
  int iteration = 0;
  double update_rho = 0.0;
  double update_v = 0.0;
  double update_s = 0.0;
  double residual_continuity = 0.0;
  double residual_momentum = 0.0;
  double residual_entropy = 0.0;
  double mass = 0.0;  // integral of rho after the update
  double damping = 0.0;
  double max_update() const;
  double max_residual() const;
};

struct StageReport {
  double t = 0.0;
  int iterations = 0;
  bool converged = false;
  double damping = 0.0;
  double tolerance = 0.0;
  std::vector<OuterRecord> history;
  std::string message;
};

struct FixedPointReport {
  std::vector<StageReport> stages;      // every attempted stage, in order
  std::vector<std::string> restarts;    // restart events
  CoupledResiduals final_residuals;     // raw scaled residuals at t = 1
  bool converged = false;
  std::string failure;
  double wall_time_s = 0.0;
  double max_mass_defect = 0.0;         // worst continuity mass identity defect
  double max_mass_excess = -1e300;      // worst (integral rho - M) over outer iterates
  int total_iterations = 0;
  std::string rho_sequencing;

  // Iterations of the last successful stage (warm-started sweep points
  // report only this).
  int final_stage_iterations() const;
};

struct CoupledSolution {
  State state;
  FixedPointReport report;
};

using CheckpointFn = std::function<void(double t, const State&)>;

State apply_T(const State& st, double t, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
              const Grid& g, const SolveOptions& opts, MapVariant map = MapVariant::Joint,
              SolverWorkspace* ws = nullptr);

// Damped continuation x <- (1-a) x + a T_t(x) over the schedule. Never throws
// on solver failure: the best state reached and a failure report are
// returned instead.
CoupledSolution solve_coupled(const State& initial, const ContinuationSchedule& schedule, const ModelParams& mp,
                              const ApproxParams& ap, const TruncationK& K, const Grid& g, const SolveOptions& opts,
                              const CheckpointFn& checkpoint = {});

}  // namespace nsf

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nsf/fixedpoint.hpp"

namespace nsf {

// v = grad phi + curl psi with curl psi = (d psi/dy, -d psi/dx). phi lives at
// cell centers with zero mean; psi lives at nodes and vanishes on the wall.
struct HelmholtzResult {
  ScalarField phi;
  NodeField psi;
  VectorField grad_phi;
  VectorField curl_psi;
  double reconstruction_error = 0.0;  // ||v - grad phi - curl psi|| / ||v|| (absolute if v = 0)
  double curl_divergence = 0.0;       // max |div curl psi|
  double poisson_residual = 0.0;      // max |Lap phi - div v|
};

// Throws std::invalid_argument when v.n != 0 on the boundary.
HelmholtzResult helmholtz_decompose(const VectorField& v, const Grid& g, const SolveOptions& opts = {});

// Discrete curl of a node field; its divergence vanishes identically.
VectorField curl(const NodeField& psi, const Grid& g);

struct NormPanel {
  double v_h1 = 0.0;
  double kr_l2gamma = 0.0;
  double pressure_l2 = 0.0;
  double theta_l3m = 0.0;
  double grad_theta_lr = 0.0;
  double r = 0.0;  // min{2, 3m/(m+1)}
  double grad_s_l2 = 0.0;
  double boundary_exp_s = 0.0;  // boundary integral of e^s + e^-s
  // The entries as (name, value) pairs in the fixed report/CSV order.
  std::vector<std::pair<std::string, double>> entries() const;
};

struct GStats {
  double max = 0.0;
  double l2 = 0.0;
  double eta = 0.0;
  double ratio = 0.0;       // max / (1 + k^(1 + 2 gamma/3 + eta))
  double condition = 0.0;   // (k-3)/k (k-3)^gamma - max, NaN for k <= 3
  bool condition_holds = false;  // condition >= 1
};

struct DiagnosticsReport {
  NormPanel panel;
  double energy_residual = 0.0;
  double entropy_residual = 0.0;
  double entropy_rhs = 0.0;
  GStats g;
  double overshoot = 0.0;  // NaN when k <= 3
  double rho_min = 0.0;
  double rho_max = 0.0;
  double theta_min = 0.0;
  bool truncation_inactive = false;  // max rho <= k, so K(rho) == 1 on the solution
};

// Default eta = (gamma - 3)/6; throws std::domain_error if the resulting eta <= 0.
double default_eta(const ModelParams& mp);

// r = min{2, 3m/(m+1)}
double gradient_exponent(double m);

// G = -(2 mu + lambda) div v + P(rho, theta) at cell centers.
ScalarField compute_evf(const State& st, const ModelParams& mp, const TruncationK& K, const Grid& g);
GStats g_stats(const ScalarField& G, const ModelParams& mp, double k, double eta, const Grid& g);

// |wall integral of (L(theta)(theta - theta0) + eps s) - integral of (S(v):grad v - a2 I_K(rho) theta div v)|
double energy_balance_residual(const State& st, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
                               const Grid& g);

struct EntropyBalance {
  double lhs = 0.0;
  double rhs = 0.0;  // nonnegative by construction, asserted
  double residual() const;
};
EntropyBalance entropy_balance(const State& st, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
                               const Grid& g);
double entropy_balance_residual(const State& st, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
                                const Grid& g);

NormPanel norm_panel(const State& st, const ModelParams& mp, const TruncationK& K, const Grid& g);

// Volume fraction where rho > k - 3. Throws std::domain_error for k <= 3.
double overshoot_measure(const ScalarField& rho, double k, const Grid& g);

DiagnosticsReport diagnose(const State& st, const ModelParams& mp, const ApproxParams& ap, const TruncationK& K,
                           const Grid& g, std::optional<double> eta = std::nullopt);

// Everything a single solve needs; sweeps vary epsilon or k on a copy.
struct SweepSetup {
  ModelParams model;
  ApproxParams approx;
  Grid grid{1.0, 1.0, 32, 32};
  SolveOptions solver;
  ContinuationSchedule schedule;
  std::optional<double> eta;
  bool independent_starts = false;  // every point from rest instead of warm starts
};

enum class SweepParameter { Epsilon, K };

struct SweepRow {
  double value = 0.0;
  bool converged = false;
  std::string status;  // "converged", "converged-cold" (after a warm-start failure) or "failed"
  DiagnosticsReport diagnostics;
  CoupledResiduals residuals;
  int final_stage_iterations = 0;
  int total_iterations = 0;
  int restarts = 0;
  double wall_time_s = 0.0;
  std::string failure;
};

struct SweepReport {
  SweepParameter parameter = SweepParameter::Epsilon;
  std::vector<SweepRow> rows;
  std::vector<State> states;  // converged (or best) state per row
  bool all_converged() const;
  // Fixed column order; wall time is excluded so equal inputs give equal bytes.
  static std::vector<std::string> csv_columns(SweepParameter p);
  std::string to_csv() const;
};

// Values must be nonempty, positive and strictly monotone (either direction).
SweepReport sweep(const SweepSetup& setup, SweepParameter p, const std::vector<double>& values);
SweepReport sweep_epsilon(const SweepSetup& setup, const std::vector<double>& values);
SweepReport sweep_k(const SweepSetup& setup, const std::vector<double>& values);

}  // namespace nsf

#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsf/constitutive.hpp"
#include "nsf/grid.hpp"
#include "nsf/params.hpp"
#include "nsf/state.hpp"

namespace nsf {

enum class LinearBackend { Direct, Iterative };
enum class ContinuityMethod { Picard, Newton };

// Extra source terms added to the right-hand sides; used by manufactured
// solution studies. Entropy boundary data is supplied through theta0.
struct ManufacturedForcing {
  std::optional<ScalarField> continuity;
  std::optional<VectorField> momentum;
  std::optional<ScalarField> entropy;
};

struct SolveOptions {
  double newton_tol = 1e-12;
  int max_iter = 60;
  double picard_damping = 1.0;
  double linear_solver_tol = 1e-10;
  LinearBackend linear_backend = LinearBackend::Direct;
  ContinuityMethod continuity_method = ContinuityMethod::Picard;
  ManufacturedForcing manufactured_forcing;

  // Throws std::invalid_argument when a tolerance is not positive or the
  // damping lies outside (0,1].
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double residual = 0.0;  // Jacobi-scaled RMS residual before the step
  double update = 0.0;    // max-norm of the applied update
  double damping = 1.0;   // step length actually taken
};

struct SolveTrace {
  std::string solver;
  std::vector<IterationRecord> records;
  bool converged = false;
  int factorizations = 0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(std::string stage, const std::string& what, SolveTrace trace = {})
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), trace_(std::move(trace)) {}
  const std::string& stage() const { return stage_; }
  const SolveTrace& trace() const { return trace_; }

 private:
  std::string stage_;
  SolveTrace trace_;
};

struct ContinuityResult {
  ScalarField rho;
  SolveTrace trace;
  double mass_defect = 0.0;  // |int rho - h int K(rho) - int q/eps|
  double max_excess = 0.0;   // max(rho) - k
};

struct MomentumResult {
  VectorField w;
  SolveTrace trace;
  double linear_residual = 0.0;
};

struct EntropyResult {
  ScalarField s;
  BoundaryField s_boundary;
  SolveTrace trace;
};

// Density and velocity computed together: rho = S(w) and the Lame solve with
// the pressure evaluated at rho, convection lagged at v_old.
struct MechanicsResult {
  ScalarField rho;
  VectorField w;
  SolveTrace trace;
  double mass_defect = 0.0;
  double max_excess = 0.0;
};

// Factorization cache shared by successive mechanics solves of one
// continuation run. Results depend only on the sequence of calls.
class SolverWorkspace {
 public:
  SolverWorkspace();
  ~SolverWorkspace();
  SolverWorkspace(SolverWorkspace&&) noexcept;
  SolverWorkspace& operator=(SolverWorkspace&&) noexcept;
  void reset();
  struct Impl;
  Impl& impl() { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

// eps rho - eps Lap rho + div_up(K(rho) rho v) = eps h K(rho) + q, Neumann walls.
ContinuityResult solve_continuity(const VectorField& v, const ModelParams& mp, const ApproxParams& ap,
                                  const TruncationK& K, const Grid& g, const SolveOptions& opts,
                                  const ScalarField* initial = nullptr);

// -div S(w) = t[-conv(v_old) - grad P(rho, e^s) + K(rho) rho F] + q with
// w.n = 0 and the flat-wall slip condition.
MomentumResult solve_momentum(const ScalarField& rho, const ScalarField& s, const VectorField& v_old, double t,
                              const ModelParams& mp, const TruncationK& K, const Grid& g, const SolveOptions& opts);

// -Lap Phi(z) = t R(rho, v, s_old) + q with the Robin flux condition
// Phi'(z) dz/dn + eps z = -t L(e^z)(e^z - theta0) on the walls.
EntropyResult solve_entropy(const ScalarField& rho, const VectorField& v, const ScalarField& s_old, double t,
                            const ModelParams& mp, const ApproxParams& ap, const TruncationK& K, const Grid& g,
                            const SolveOptions& opts, const ScalarField* z_init = nullptr,
                            const BoundaryField* zb_init = nullptr);

MechanicsResult solve_mechanics(const ScalarField& rho_lag, const ScalarField& s, const VectorField& v_old, double t,
                                const ModelParams& mp, const ApproxParams& ap, const TruncationK& K, const Grid& g,
                                const SolveOptions& opts, SolverWorkspace* ws = nullptr,
                                const VectorField* w_init = nullptr);

// Residuals of the discrete equations, per unit area, without the Jacobi
// scaling. Momentum residual entries on boundary faces are 0.
ScalarField continuity_residual(const ScalarField& rho, const VectorField& v, const ModelParams& mp,
                                const ApproxParams& ap, const TruncationK& K, const Grid& g,
                                const SolveOptions& opts = {});
VectorField momentum_residual(const VectorField& w, const ScalarField& rho, const ScalarField& s,
                              const VectorField& v_old, double t, const ModelParams& mp, const TruncationK& K,
                              const Grid& g, const SolveOptions& opts = {});
struct EntropyResidual {
  ScalarField cells;
  BoundaryField walls;
};
EntropyResidual entropy_residual(const ScalarField& z, const BoundaryField& zb, const ScalarField& rho,
                                 const VectorField& v, const ScalarField& s_old, double t, const ModelParams& mp,
                                 const ApproxParams& ap, const TruncationK& K, const Grid& g,
                                 const SolveOptions& opts = {});

// Jacobi-scaled RMS residuals of the three equations at a state (with the
// lagged arguments equal to the state itself), as used for convergence.
struct CoupledResiduals {
  double continuity = 0.0;
  double momentum = 0.0;
  double entropy = 0.0;
  double max() const;
};
CoupledResiduals coupled_residuals(const State& st, double t, const ModelParams& mp, const ApproxParams& ap,
                                   const TruncationK& K, const Grid& g, const SolveOptions& opts = {});

// |int rho - h int K(rho) - int q/eps|, the defect of the discrete mass identity.
double mass_identity_defect(const ScalarField& rho, const ModelParams& mp, const ApproxParams& ap,
                            const TruncationK& K, const Grid& g, const SolveOptions& opts = {});

// Integrated source of the entropy equation (before the factor t), at cells:
// S(v):grad v - a2 theta [div(v int_K) + div(K rho v)] - a2 theta K rho v.grad s + a2 theta K v.grad rho.
ScalarField energy_source(const ScalarField& rho, const VectorField& v, const ScalarField& s_old,
                          const ModelParams& mp, const TruncationK& K, const Grid& g);
// Advective derivative v.grad q at cells, averaging the two one-sided face
// products in each direction.
ScalarField advective_derivative(const VectorField& v, const ScalarField& q, const Grid& g);
// Skew-symmetrized convection 1/2 div(c v (x) v) + 1/2 c v.grad v at faces,
// with c = K(rho) rho given at cells.
VectorField convection(const VectorField& v, const ScalarField& c, const Grid& g, const WallClosure& wc);
// -div S(w) evaluated with field operators (slip walls); interior faces only.
VectorField lame_apply(const VectorField& w, const ModelParams& mp, const Grid& g);

}  // namespace nsf

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nsf/grid.hpp"

namespace nsf {

// Named analytic preset with numeric parameters, e.g. fourier1{amplitude, wavenumber}.
struct PresetSpec {
  std::string name;
  std::map<std::string, double> values;
  friend bool operator==(const PresetSpec&, const PresetSpec&) = default;
};

// Body force F on the domain. Keeps the preset it was built from so that a
// configuration can be written back out.
class ForceField {
 public:
  ForceField();
  ForceField(std::function<Vec2(Vec2)> fn, double sup_norm, std::string description, PresetSpec spec = {});

  Vec2 operator()(Vec2 p) const { return fn_(p); }
  double sup_norm() const { return sup_norm_; }
  const std::string& description() const { return description_; }
  const PresetSpec& spec() const { return spec_; }

 private:
  std::function<Vec2(Vec2)> fn_;
  double sup_norm_ = 0.0;
  std::string description_;
  PresetSpec spec_;
};

// Boundary temperature theta0 with pointwise bounds lower <= theta0 <= upper.
class BoundaryTemperature {
 public:
  explicit BoundaryTemperature(double value = 1.0);
  BoundaryTemperature(std::function<double(Vec2)> fn, double lower, double upper, std::string description,
                      PresetSpec spec = {});

  double operator()(Vec2 p) const { return fn_(p); }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  const std::string& description() const { return description_; }
  const PresetSpec& spec() const { return spec_; }
  bool is_constant() const { return lower_ == upper_; }

 private:
  std::function<double(Vec2)> fn_;
  double lower_ = 1.0;
  double upper_ = 1.0;
  std::string description_;
  PresetSpec spec_;
};

// Presets: constant, fourier1, gaussian-bump. Unknown names or missing
// parameters throw std::invalid_argument naming the offender.
ForceField make_force(const PresetSpec& spec, double lx, double ly);
BoundaryTemperature make_theta0(const PresetSpec& spec, double lx, double ly);
// Parameter names each preset accepts, in canonical order.
std::vector<std::string> force_preset_keys(const std::string& name);
std::vector<std::string> theta0_preset_keys(const std::string& name);

struct ModelParams {
  double gamma = 4.0;
  double m = 2.5;
  double l = 1.5;
  double mu = 1.0;
  double lambda = 0.0;
  double f = 0.1;
  double a1 = 1.0;  // prefactor of the barotropic pressure
  double a2 = 1.0;  // prefactor of the thermal pressure and internal energy
  double a3 = 1.0;  // conductivity prefactor
  double a4 = 1.0;  // boundary transfer prefactor
  double M = 1.0;
  BoundaryTemperature theta0{1.0};
  ForceField force{};
};

struct ApproxParams {
  double epsilon = 1e-2;
  double k = 10.0;
  double t = 1.0;
};

// h = M/|Omega|. Always recomputed from its inputs.
inline double mean_density(const ModelParams& mp, const Grid& g) { return mp.M / g.area(); }

enum class ValidationMode { Strict, Exploratory };

struct Condition {
  std::string name;        // e.g. "gamma > 3"
  std::string quantity;    // left-hand side symbol, e.g. "gamma"
  std::string relation;    // ">" or ">="
  double value = 0.0;      // evaluated left-hand side
  double threshold = 0.0;  // evaluated right-hand side
  bool satisfied = false;
  // Conditions from the existence theorem are demoted to warnings in
  // exploratory mode; well-posedness conditions are always enforced.
  bool theorem_class = false;
};

struct ValidationReport {
  std::vector<Condition> conditions;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  bool valid = false;  // AND over every condition

  bool admissible(ValidationMode mode) const;
  std::vector<Condition> violations() const;
  std::string summary() const;
};

double threshold_m(double gamma);
ValidationReport validate_params(const ModelParams& mp);
// Throws std::invalid_argument for epsilon <= 0, k <= 0, t outside [0,1]
// or h >= k.
void validate_approx(const ApproxParams& ap, double h);

}  // namespace nsf

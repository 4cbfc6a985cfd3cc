#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsf/analysis.hpp"

namespace nsf {

// Error in a configuration file. The message names the file, the section and
// key, and the line when it is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  double lx = 1.0;
  double ly = 1.0;
  int nx = 32;
  int ny = 32;
  Grid make() const { return Grid(lx, ly, nx, ny); }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct OutputSpec {
  std::string directory = "nsf-output";
  bool write_fields = false;
  bool checkpoints = false;
  std::vector<double> sweep_epsilon;
  std::vector<double> sweep_k;
  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

// One run as described by a configuration file. The model keeps its force
// and boundary temperature as presets; model_params() builds the fields.
struct RunConfig {
  ModelParams model;  // numeric entries only; force/theta0 come from the presets
  PresetSpec force{"constant", {{"x", 0.0}, {"y", 0.0}}};
  PresetSpec theta0{"constant", {{"value", 1.0}}};
  ApproxParams approx;
  GridSpec grid;
  SolveOptions solver;
  ContinuationSchedule schedule;
  OutputSpec output;
  ValidationMode validation = ValidationMode::Strict;
  std::optional<double> eta;
  std::string initial_state;  // restart file, empty for the rest state

  ModelParams model_params() const;
  SweepSetup sweep_setup() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

// Parses the sectioned key = value format documented in configs/SCHEMA.md.
RunConfig parse_config(std::istream& is, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
// Inverse of parse_config: parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

std::string to_string(MapVariant m);
std::string to_string(LinearBackend b);
std::string to_string(ContinuityMethod m);
std::string to_string(ValidationMode m);

}  // namespace nsf

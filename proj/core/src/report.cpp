#include "nsf/report.hpp"

#include <cmath>

#include "json.hpp"

namespace nsf {

using nlohmann::ordered_json;

namespace {

// JSON has no NaN or infinity; those become strings.
ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

ordered_json to_json(const ValidationReport& v) {
  ordered_json j;
  j["valid"] = v.valid;
  j["conditions"] = ordered_json::array();
  for (const Condition& c : v.conditions)
    j["conditions"].push_back({{"name", c.name},
                               {"quantity", c.quantity},
                               {"relation", c.relation},
                               {"value", number(c.value)},
                               {"threshold", number(c.threshold)},
                               {"satisfied", c.satisfied},
                               {"theorem_class", c.theorem_class}});
  j["warnings"] = v.warnings;
  j["notes"] = v.notes;
  return j;
}

ordered_json to_json(const CoupledResiduals& r) {
  return {{"continuity", number(r.continuity)}, {"momentum", number(r.momentum)}, {"entropy", number(r.entropy)}};
}

ordered_json to_json(const FixedPointReport& f) {
  ordered_json j;
  j["converged"] = f.converged;
  j["failure"] = f.failure;
  j["rho_sequencing"] = f.rho_sequencing;
  j["total_iterations"] = f.total_iterations;
  j["final_stage_iterations"] = f.final_stage_iterations();
  j["final_residuals"] = to_json(f.final_residuals);
  j["max_mass_defect"] = number(f.max_mass_defect);
  j["max_mass_excess"] = number(f.max_mass_excess);
  j["restarts"] = f.restarts;
  j["stages"] = ordered_json::array();
  for (const StageReport& s : f.stages) {
    ordered_json st{{"t", s.t},
                    {"iterations", s.iterations},
                    {"converged", s.converged},
                    {"damping", s.damping},
                    {"tolerance", s.tolerance},
                    {"message", s.message}};
    st["history"] = ordered_json::array();
    for (const OuterRecord& r : s.history)
      st["history"].push_back({{"iteration", r.iteration},
                               {"damping", r.damping},
                               {"update_rho", number(r.update_rho)},
                               {"update_v", number(r.update_v)},
                               {"update_s", number(r.update_s)},
                               {"residual_continuity", number(r.residual_continuity)},
                               {"residual_momentum", number(r.residual_momentum)},
                               {"residual_entropy", number(r.residual_entropy)},
                               {"mass", number(r.mass)}});
    j["stages"].push_back(std::move(st));
  }
  return j;
}

ordered_json to_json(const DiagnosticsReport& d) {
  ordered_json j;
  ordered_json panel;
  for (const auto& [name, v] : d.panel.entries()) panel[name] = number(v);
  panel["r"] = number(d.panel.r);
  j["norm_panel"] = panel;
  j["energy_balance_residual"] = number(d.energy_residual);
  j["entropy_balance_residual"] = number(d.entropy_residual);
  j["entropy_production"] = number(d.entropy_rhs);
  j["effective_viscous_flux"] = {{"max", number(d.g.max)},
                                 {"l2", number(d.g.l2)},
                                 {"eta", number(d.g.eta)},
                                 {"ratio", number(d.g.ratio)},
                                 {"condition", number(d.g.condition)},
                                 {"condition_holds", d.g.condition_holds}};
  j["overshoot"] = number(d.overshoot);
  j["rho_min"] = number(d.rho_min);
  j["rho_max"] = number(d.rho_max);
  j["theta_min"] = number(d.theta_min);
  j["truncation_inactive"] = d.truncation_inactive;
  return j;
}

ordered_json body(const RunReport& r) {
  ordered_json j;
  j["command"] = r.command;
  j["status"] = r.status;
  j["exit_code"] = r.exit_code;
  if (!r.error.empty()) j["error"] = r.error;
  j["config"] = r.config_text;
  if (r.validation) j["validation"] = to_json(*r.validation);
  if (r.fixed_point) j["fixed_point"] = to_json(*r.fixed_point);
  if (r.diagnostics) j["diagnostics"] = to_json(*r.diagnostics);
  return j;
}

}  // namespace

std::string to_json(const RunReport& r, int indent) {
  ordered_json j = body(r);
  ordered_json timing;
  if (r.fixed_point) timing["wall_time_s"] = r.fixed_point->wall_time_s;
  j["timing"] = timing.is_null() ? ordered_json::object() : timing;
  return j.dump(indent) + "\n";
}

std::string to_json_without_timing(const RunReport& r, int indent) { return body(r).dump(indent) + "\n"; }

}  // namespace nsf

// nsf: command-line front end for the truncated Navier-Stokes-Fourier solver.
//
//   nsf run <config>
//   nsf sweep <config> --sweep=epsilon|k [--values=a,b,...]
//   nsf verify --suite=mms|invariants
//
// Exit codes: 0 success, 1 configuration or validation error, 2 solver
// failure, 3 sweep with at least one failed point.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nsf/analysis.hpp"
#include "nsf/config.hpp"
#include "nsf/io.hpp"
#include "nsf/report.hpp"
#include "nsf/verification.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kSolver = 2, kSweep = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything that must hold before a solve starts. Failures are usage errors
// (exit 1) and name the offending key or condition.
struct Prepared {
  nsf::RunConfig config;
  nsf::ModelParams model;
  nsf::Grid grid{1.0, 1.0, 2, 2};
  nsf::ValidationReport validation;
  fs::path out_dir;
};

fs::path output_directory(const nsf::RunConfig& c) {
  if (const char* env = std::getenv("NSF_OUTPUT_DIR"); env && *env) return fs::path(env);
  return fs::path(c.output.directory);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

template <class F>
void write_with(const fs::path& path, F&& body) {
  std::ofstream out(path, std::ios::binary);
  body(out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Prepared prepare(const std::string& config_path) {
  Prepared p;
  p.config = nsf::load_config(config_path);
  p.model = p.config.model_params();
  p.grid = p.config.grid.make();
  p.validation = nsf::validate_params(p.model);
  if (!p.validation.admissible(p.config.validation)) {
    std::string msg = config_path + ": parameters violate";
    for (const nsf::Condition& c : p.validation.violations()) {
      if (p.config.validation == nsf::ValidationMode::Exploratory && c.theorem_class) continue;
      msg += (msg.back() == ')' ? ", '" : " '") + c.name + "' (" + c.quantity + " = " + nsf::format_number(c.value) + ", needs " + c.relation +
             " " + nsf::format_number(c.threshold) + ")";
    }
    msg += " in " + nsf::to_string(p.config.validation) + " mode";
    throw UsageError(msg);
  }
  for (const std::string& w : p.validation.warnings) std::cerr << "warning: " << w << '\n';
  if (!p.config.eta) {
    try {
      (void)nsf::default_eta(p.model);
    } catch (const std::domain_error& e) {
      throw UsageError(config_path + ": [analysis] eta: " + e.what());
    }
  }
  try {
    nsf::validate_approx(p.config.approx, nsf::mean_density(p.model, p.grid));
  } catch (const std::invalid_argument& e) {
    throw UsageError(config_path + ": [approx] " + e.what());
  }

  p.out_dir = output_directory(p.config);
  std::error_code ec;
  fs::create_directories(p.out_dir, ec);
  if (ec || !fs::is_directory(p.out_dir))
    throw UsageError("output directory '" + p.out_dir.string() + "' is not writable: " + ec.message());
  return p;
}

nsf::State initial_state(const Prepared& p) {
  if (p.config.initial_state.empty()) return nsf::rest_state(p.grid, nsf::mean_density(p.model, p.grid));
  std::ifstream in(p.config.initial_state);
  if (!in) throw UsageError("[run] initial_state: cannot open '" + p.config.initial_state + "'");
  try {
    nsf::StateFile f = nsf::read_state(in);
    if (!(f.grid == p.grid)) throw UsageError("grid in restart file does not match [grid]");
    return std::move(f.state);
  } catch (const std::exception& e) {
    throw UsageError("[run] initial_state: " + p.config.initial_state + ": " + e.what());
  }
}

void write_fields(const fs::path& dir, const nsf::State& st, const nsf::Grid& g) {
  write_with(dir / "rho.csv", [&](std::ostream& os) { nsf::write_field_csv(os, st.rho, g); });
  write_with(dir / "u.csv", [&](std::ostream& os) { nsf::write_field_csv(os, st.v.u, g); });
  write_with(dir / "v.csv", [&](std::ostream& os) { nsf::write_field_csv(os, st.v.v, g); });
  write_with(dir / "s.csv", [&](std::ostream& os) { nsf::write_field_csv(os, st.s, g); });
  write_with(dir / "s_boundary.csv", [&](std::ostream& os) { nsf::write_boundary_csv(os, st.s_boundary, g); });
}

int cmd_run(const std::string& config_path) {
  Prepared p = prepare(config_path);
  const nsf::RunConfig& c = p.config;
  const nsf::TruncationK K(c.approx.k);

  nsf::CheckpointFn checkpoint;
  if (c.output.checkpoints) {
    fs::create_directories(p.out_dir / "checkpoints");
    checkpoint = [&](double t, const nsf::State& st) {
      write_with(p.out_dir / "checkpoints" / ("t-" + nsf::format_number(t) + ".state"),
                 [&](std::ostream& os) { nsf::write_state(os, st, p.grid); });
    };
  }

  nsf::RunReport report;
  report.command = "run";
  report.config_text = nsf::serialize_config(c);
  report.validation = p.validation;

  const nsf::CoupledSolution sol =
      nsf::solve_coupled(initial_state(p), c.schedule, p.model, c.approx, K, p.grid, c.solver, checkpoint);
  report.fixed_point = sol.report;
  try {
    report.diagnostics = nsf::diagnose(sol.state, p.model, c.approx, K, p.grid, c.eta);
  } catch (const std::exception& e) {
    report.error = std::string("diagnostics: ") + e.what();
  }

  const bool ok = sol.report.converged && report.error.empty();
  report.status = ok ? "converged" : "failed";
  report.exit_code = ok ? kOk : kSolver;
  if (!sol.report.converged) report.error = sol.report.failure + (report.error.empty() ? "" : "; " + report.error);

  write_with(p.out_dir / "state.state", [&](std::ostream& os) { nsf::write_state(os, sol.state, p.grid); });
  if (c.output.write_fields) write_fields(p.out_dir, sol.state, p.grid);
  write_file(p.out_dir / "report.json", nsf::to_json(report) + "\n");

  const nsf::CoupledResiduals& r = sol.report.final_residuals;
  std::printf("%s after %d outer iterations (%zu restarts)\n", report.status.c_str(), sol.report.total_iterations,
              sol.report.restarts.size());
  std::printf("residuals: continuity %s, momentum %s, entropy %s\n", nsf::format_number(r.continuity).c_str(),
              nsf::format_number(r.momentum).c_str(), nsf::format_number(r.entropy).c_str());
  if (report.diagnostics)
    std::printf("balances: energy %s, entropy %s\n", nsf::format_number(report.diagnostics->energy_residual).c_str(),
                nsf::format_number(report.diagnostics->entropy_residual).c_str());
  if (!ok) std::fprintf(stderr, "nsf run: %s\n", report.error.c_str());
  std::printf("wrote %s\n", (p.out_dir / "report.json").string().c_str());
  return report.exit_code;
}

void check_sorted(const std::vector<double>& v) {
  if (v.empty()) throw UsageError("--values: no sweep values given");
  for (double x : v)
    if (!(x > 0.0)) throw UsageError("--values: every value must be positive, got " + nsf::format_number(x));
  bool up = true, down = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    up = up && v[i] > v[i - 1];
    down = down && v[i] < v[i - 1];
  }
  if (!up && !down) throw UsageError("--values: values must be sorted (strictly increasing or decreasing)");
}

int cmd_sweep(const std::string& config_path, const std::string& which, std::vector<double> values) {
  Prepared p = prepare(config_path);
  const nsf::SweepParameter param = which == "k" ? nsf::SweepParameter::K : nsf::SweepParameter::Epsilon;
  if (values.empty()) values = param == nsf::SweepParameter::K ? p.config.output.sweep_k : p.config.output.sweep_epsilon;
  check_sorted(values);
  for (double v : values) {
    nsf::ApproxParams ap = p.config.approx;
    (param == nsf::SweepParameter::K ? ap.k : ap.epsilon) = v;
    try {
      nsf::validate_approx(ap, nsf::mean_density(p.model, p.grid));
    } catch (const std::invalid_argument& e) {
      throw UsageError("--values: " + nsf::format_number(v) + ": " + e.what());
    }
  }

  const nsf::SweepReport rep = nsf::sweep(p.config.sweep_setup(), param, values);
  const fs::path csv = p.out_dir / "sweep.csv";
  write_file(csv, rep.to_csv());

  nsf::RunReport report;
  report.command = "sweep";
  report.config_text = nsf::serialize_config(p.config);
  report.validation = p.validation;
  report.status = rep.all_converged() ? "converged" : "failed";
  report.exit_code = rep.all_converged() ? kOk : kSweep;
  for (const nsf::SweepRow& row : rep.rows)
    if (!row.converged) report.error += (report.error.empty() ? "" : "; ") + nsf::format_number(row.value) + ": " + row.failure;
  write_file(p.out_dir / "report.json", nsf::to_json(report) + "\n");

  for (const nsf::SweepRow& row : rep.rows)
    std::printf("%s = %-8s %-15s iterations %4d  overshoot %s\n", which.c_str(), nsf::format_number(row.value).c_str(),
                row.status.c_str(), row.final_stage_iterations,
                row.converged ? nsf::format_number(row.diagnostics.overshoot).c_str() : "-");
  std::printf("wrote %s\n", csv.string().c_str());
  return report.exit_code;
}

int cmd_verify(const std::string& suite) {
  bool ok = true;
  if (suite == "mms") {
    std::printf("%-12s %8s %14s %8s\n", "solve", "n", "error", "order");
    for (const nsf::mms::OrderStudy& s : nsf::verify::run_mms_suite()) {
      for (std::size_t i = 0; i < s.resolutions.size(); ++i)
        std::printf("%-12s %8d %14.6e %8s\n", s.name.c_str(), s.resolutions[i], s.errors[i],
                    i ? nsf::format_number(s.orders[i - 1]).substr(0, 6).c_str() : "");
      std::printf("%s %s: observed order %.3f, required %.1f\n", s.passed ? "PASS" : "FAIL", s.name.c_str(),
                  s.observed_order, s.required_order);
      ok = ok && s.passed;
    }
  } else {
    for (const nsf::verify::PropertyCheck& c : nsf::verify::run_invariants_suite()) {
      std::printf("%s %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
      ok = ok && c.passed;
    }
  }
  return ok ? kOk : kSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady compressible Navier-Stokes-Fourier solver (truncated, regularized scheme)"};
  app.require_subcommand(1);

  std::string config_path, which = "epsilon", suite;
  std::vector<double> values;

  auto* run = app.add_subcommand("run", "Solve one configuration and write report, state and fields");
  run->add_option("config", config_path, "Configuration file")->required();

  auto* sweep = app.add_subcommand("sweep", "Sweep epsilon or k and write sweep.csv");
  sweep->add_option("config", config_path, "Configuration file")->required();
  sweep->add_option("--sweep", which, "Swept parameter")->check(CLI::IsMember({"epsilon", "k"}));
  sweep->add_option("--values", values, "Comma-separated sweep values (default: [output] list)")->delimiter(',');

  auto* verify = app.add_subcommand("verify", "Run a built-in verification suite");
  verify->add_option("--suite", suite, "Suite name")->required()->check(CLI::IsMember({"mms", "invariants"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*sweep) return cmd_sweep(config_path, which, values);
    return cmd_verify(suite);
  } catch (const nsf::ConfigError& e) {
    std::cerr << "nsf: " << e.what() << '\n';
    return kConfig;
  } catch (const UsageError& e) {
    std::cerr << "nsf: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "nsf: solver error: " << e.what() << '\n';
    return kSolver;
  }
}

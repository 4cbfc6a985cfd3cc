#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "generators.hpp"
#include "json.hpp"
#include "nsf/config.hpp"
#include "nsf/io.hpp"
#include "nsf/report.hpp"

using namespace nsf;

namespace {

const char* kMinimalConfig = R"([model]
gamma = 4
m = 2.5
l = 1.5
mu = 1
lambda = 0
f = 0.1
a1 = 1
a2 = 1
a3 = 1
a4 = 1
M = 1

[force]
preset = constant
x = 0
y = 0

[theta0]
preset = constant
value = 1

[approx]
epsilon = 0.01
k = 10

[grid]
lx = 1
ly = 1
nx = 8
ny = 8
)";

std::string error_of(const std::string& text) {
  std::istringstream is(text);
  try {
    parse_config(is, "test.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return s.replace(at, from.size(), to);
}

}  // namespace

// ---------------------------------------------------------------------------
// Number formatting

TEST(Numbers, FormattingRules) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-2.5), "-2.5");
  EXPECT_EQ(format_number(1e-4), "1e-04");
  EXPECT_EQ(format_number(0.001), "0.001");
  EXPECT_EQ(format_number(123456.0), "123456");
  EXPECT_EQ(format_number(1e6), "1e+06");
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Numbers, RoundTripIsExact) {
  proptest::Gen gen(71);
  for (int n = 0; n < 2000; ++n) {
    const double x = (n % 2 ? -1.0 : 1.0) * gen.log_uniform(1e-300, 1e300);
    EXPECT_EQ(parse_number(format_number(x)), x) << format_number(x);
  }
  EXPECT_EQ(parse_number("+3.5"), 3.5);
  EXPECT_TRUE(std::isnan(parse_number("nan")));
  EXPECT_THROW(parse_number("1.5x"), std::invalid_argument);
  EXPECT_THROW(parse_number(""), std::invalid_argument);
  EXPECT_THROW(parse_number("1,5"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Field tables and state files

TEST(FieldCsv, HeaderAndRowCount) {
  const Grid g(1.0, 1.0, 3, 2);
  std::ostringstream os;
  write_field_csv(os, g.cells(2.0), g);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "i,j,x,y,value");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 7);
  EXPECT_NE(s.find("\n0,0,0.16666666666666666,0.25,2\n"), std::string::npos) << s;
  std::ostringstream b;
  write_boundary_csv(b, g.boundary_field(1.0), g);
  EXPECT_EQ(b.str().substr(0, b.str().find('\n')), "side,face,x,y,value");
  EXPECT_NE(b.str().find("\nbottom,0,"), std::string::npos);
}

TEST(StateFileFormat, RoundTripIsBitExact) {
  proptest::Gen gen(72);
  for (int n = 0; n < 10; ++n) {
    const Grid g = gen.grid(2, 12);
    const State st{gen.cells(g, 0.1, 5.0), gen.noisy_velocity(g, 1.0), gen.cells(g, -1.0, 1.0),
                   g.boundary_field(gen.uniform(-1.0, 1.0))};
    std::ostringstream os;
    write_state(os, st, g);
    std::istringstream is(os.str());
    const StateFile f = read_state(is);
    EXPECT_EQ(f.grid.nx(), g.nx());
    EXPECT_EQ(f.grid.lx(), g.lx());
    EXPECT_TRUE(f.state == st);
  }
}

TEST(StateFileFormat, ErrorsNameTheLine) {
  const Grid g(1.0, 1.0, 2, 2);
  std::ostringstream os;
  write_state(os, rest_state(g, 1.0), g);
  const std::string good = os.str();
  auto error = [](const std::string& text) {
    std::istringstream is(text);
    try {
      read_state(is);
    } catch (const std::runtime_error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(error("nsf-state 2\n"), "state file line 1: missing header 'nsf-state 1'");
  // Line 4 is the first rho value.
  EXPECT_EQ(error(replace(good, "rho 4\n1\n", "rho 4\n1.0.0\n")).rfind("state file line 4: ", 0), 0u);
  EXPECT_NE(error(replace(good, "rho 4", "rho 5")).find("line 3"), std::string::npos);
  // Cut after the rho block: the u header on line 8 is missing.
  EXPECT_EQ(error(good.substr(0, good.find("u "))), "state file line 8: unexpected end of file");
}

// ---------------------------------------------------------------------------
// Configuration files

TEST(Config, MinimalFileUsesDefaults) {
  std::istringstream is(kMinimalConfig);
  const RunConfig c = parse_config(is);
  EXPECT_EQ(c.grid.nx, 8);
  EXPECT_EQ(c.schedule.t_steps, ContinuationSchedule{}.t_steps);
  EXPECT_EQ(c.solver.newton_tol, SolveOptions{}.newton_tol);
  EXPECT_EQ(c.validation, ValidationMode::Strict);
  EXPECT_FALSE(c.eta.has_value());
  EXPECT_EQ(c.output.directory, "nsf-output");
  EXPECT_EQ(c.model_params().force.description(), "constant(0, 0)");
}

TEST(Config, MissingKeyIsNamed) {
  const std::string e = error_of(replace(kMinimalConfig, "mu = 1\n", ""));
  EXPECT_EQ(e, "test.ini: [model] mu: missing required key");
}

TEST(Config, UnknownKeyAndSectionCarryLineNumbers) {
  EXPECT_EQ(error_of(replace(kMinimalConfig, "M = 1\n", "M = 1\nviscosity = 3\n")),
            "test.ini:13: [model] viscosity: unknown key");
  EXPECT_EQ(error_of(std::string(kMinimalConfig) + "[extras]\nfoo = 1\n").rfind("test.ini", 0), 0u);
  EXPECT_NE(error_of(std::string(kMinimalConfig) + "[extras]\nfoo = 1\n").find("[extras]"), std::string::npos);
  EXPECT_NE(error_of(std::string(kMinimalConfig) + "[extras]\nfoo = 1\n").find("unknown section"),
            std::string::npos);
}

TEST(Config, BadValuesAreReported) {
  EXPECT_EQ(error_of(replace(kMinimalConfig, "gamma = 4", "gamma = four")),
            "test.ini:2: [model] gamma: expected a number, got 'four'");
  EXPECT_EQ(error_of(replace(kMinimalConfig, "nx = 8", "nx = 8.5")),
            "test.ini:30: [grid] nx: expected an integer, got '8.5'");
  EXPECT_NE(error_of(std::string(kMinimalConfig) + "[schedule]\nt_steps = 0, 0.5\n").find("end at 1"),
            std::string::npos);
  EXPECT_NE(error_of(replace(kMinimalConfig, "preset = constant\nx = 0", "preset = vortex\nx = 0")).find("[force]"),
            std::string::npos);
  EXPECT_NE(error_of(std::string(kMinimalConfig) + "[solver]\nlinear_backend = gpu\n").find("expected direct"),
            std::string::npos);
  EXPECT_NE(error_of("[model\n").find("test.ini:1"), std::string::npos);
}

TEST(Config, SerializeRoundTrip) {
  std::istringstream is(kMinimalConfig);
  RunConfig c = parse_config(is);
  c.force = {"fourier1", {{"amplitude", 0.1}, {"wavenumber", 2.0}}};
  c.theta0 = {"gaussian-bump", {{"base", 1.0}, {"amplitude", 0.3}, {"x0", 0.5}, {"y0", 0.0}, {"width", 0.2}}};
  c.schedule.t_steps = {0.0, 0.1, 1.0};
  c.schedule.stage_tolerances = {1e-6, 1e-7, 1e-9};
  c.schedule.map = MapVariant::Sequential;
  c.solver.linear_backend = LinearBackend::Iterative;
  c.output.sweep_epsilon = {0.1, 0.01};
  c.output.checkpoints = true;
  c.validation = ValidationMode::Exploratory;
  c.eta = 0.1;
  c.initial_state = "previous/state.state";
  c.model.lambda = 1.0 / 3.0;
  const std::string text = serialize_config(c);
  std::istringstream back(text);
  const RunConfig d = parse_config(back);
  EXPECT_TRUE(c == d) << text;
  EXPECT_EQ(serialize_config(d), text);
}

TEST(Config, ShippedConfigsParse) {
  for (const char* name : {"rest.ini", "forced.ini", "gamma3_strict.ini", "gamma3_exploratory.ini"})
    EXPECT_NO_THROW(load_config(std::string(NSF_CONFIG_DIR) + "/" + name)) << name;
  EXPECT_THROW(load_config(std::string(NSF_CONFIG_DIR) + "/does-not-exist.ini"), ConfigError);
}

// ---------------------------------------------------------------------------
// Reports

TEST(Report, TimingIsKeptApart) {
  const Grid g(1.0, 1.0, 6, 6);
  const ModelParams mp;
  const ApproxParams ap;
  const TruncationK K(ap.k);
  const CoupledSolution sol = solve_coupled(rest_state(g, 1.0), {}, mp, ap, K, g, {});
  RunReport r;
  r.command = "run";
  r.status = "converged";
  r.config_text = "[model]\n";
  r.validation = validate_params(mp);
  r.fixed_point = sol.report;
  r.diagnostics = diagnose(sol.state, mp, ap, K, g);

  const auto full = nlohmann::ordered_json::parse(to_json(r));
  const auto bare = nlohmann::ordered_json::parse(to_json_without_timing(r));
  EXPECT_TRUE(full.contains("timing"));
  EXPECT_TRUE(full["timing"].contains("wall_time_s"));
  EXPECT_FALSE(bare.contains("timing"));
  auto stripped = full;
  stripped.erase("timing");
  EXPECT_EQ(stripped, bare);
  EXPECT_EQ(bare["fixed_point"]["converged"], true);
  EXPECT_EQ(bare["diagnostics"]["norm_panel"].size(), 8u);
  EXPECT_EQ(bare["validation"]["valid"], true);
  EXPECT_FALSE(bare.contains("error"));
  // Bare reports of equal runs are byte-identical.
  RunReport again = r;
  again.fixed_point->wall_time_s += 1.0;
  EXPECT_EQ(to_json_without_timing(again), to_json_without_timing(r));
  EXPECT_NE(to_json(again), to_json(r));
}

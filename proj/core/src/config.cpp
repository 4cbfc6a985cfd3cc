#include "nsf/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nsf/io.hpp"

namespace nsf {

namespace pt = boost::property_tree;

std::string to_string(MapVariant m) { return m == MapVariant::Joint ? "joint" : "sequential"; }
std::string to_string(LinearBackend b) { return b == LinearBackend::Direct ? "direct" : "iterative"; }
std::string to_string(ContinuityMethod m) { return m == ContinuityMethod::Picard ? "picard" : "newton"; }
std::string to_string(ValidationMode m) { return m == ValidationMode::Strict ? "strict" : "exploratory"; }

ModelParams RunConfig::model_params() const {
  ModelParams mp = model;
  mp.force = make_force(force, grid.lx, grid.ly);
  mp.theta0 = make_theta0(theta0, grid.lx, grid.ly);
  return mp;
}

SweepSetup RunConfig::sweep_setup() const {
  SweepSetup s;
  s.model = model_params();
  s.approx = approx;
  s.grid = grid.make();
  s.solver = solver;
  s.schedule = schedule;
  s.eta = eta;
  return s;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  auto model_tuple = [](const ModelParams& m) {
    return std::tuple{m.gamma, m.m, m.l, m.mu, m.lambda, m.f, m.a1, m.a2, m.a3, m.a4, m.M};
  };
  auto solver_tuple = [](const SolveOptions& s) {
    return std::tuple{s.newton_tol, s.max_iter, s.picard_damping, s.linear_solver_tol, s.linear_backend,
                      s.continuity_method};
  };
  auto schedule_tuple = [](const ContinuationSchedule& s) {
    return std::tuple{s.t_steps, s.damping, s.tolerance, s.stage_tolerances, s.max_outer, s.restart.min_t_step,
                      s.restart.max_restarts, s.restart.min_damping, s.map};
  };
  return model_tuple(a.model) == model_tuple(b.model) && a.force == b.force && a.theta0 == b.theta0 &&
         a.approx.epsilon == b.approx.epsilon && a.approx.k == b.approx.k && a.grid == b.grid &&
         solver_tuple(a.solver) == solver_tuple(b.solver) && schedule_tuple(a.schedule) == schedule_tuple(b.schedule) &&
         a.output == b.output && a.validation == b.validation && a.eta == b.eta && a.initial_state == b.initial_state;
}

namespace {

// Line of each "section.key" in the source text, for error messages.
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> out;
  std::istringstream is(text);
  std::string line, section;
  int n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(is, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      out.emplace(section, n);
    } else if (const auto eq = t.find('='); eq != std::string::npos) {
      out.emplace(section + "." + trim(t.substr(0, eq)), n);
    }
  }
  return out;
}

class Reader {
 public:
  Reader(pt::ptree tree, std::map<std::string, int> lines, std::string source)
      : tree_(std::move(tree)), lines_(std::move(lines)), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string where = source_;
    if (auto it = lines_.find(key); it != lines_.end()) where += ":" + std::to_string(it->second);
    throw ConfigError(where + ": [" + section_of(key) + "] " + name_of(key) + ": " + what);
  }

  bool has_section(const std::string& s) const { return tree_.get_child_optional(s).has_value(); }
  bool has(const std::string& key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

  std::string text(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(path(key));
    if (!v) fail(key, "missing required key");
    used_.insert(key);
    return *v;
  }

  double number(const std::string& key) const {
    const std::string s = text(key);
    try {
      return parse_number(s);
    } catch (const std::invalid_argument&) {
      fail(key, "expected a number, got '" + s + "'");
    }
  }

  int integer(const std::string& key) const {
    const std::string s = text(key);
    int x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'");
    return x;
  }

  bool boolean(const std::string& key) const {
    const std::string s = text(key);
    if (s == "true") return true;
    if (s == "false") return false;
    fail(key, "expected true or false, got '" + s + "'");
  }

  std::vector<double> list(const std::string& key) const {
    const std::string s = text(key);
    std::vector<double> out;
    if (s.empty()) return out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
      const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
      if (b == std::string::npos) fail(key, "empty list entry in '" + s + "'");
      try {
        out.push_back(parse_number(item.substr(b, e - b + 1)));
      } catch (const std::invalid_argument&) {
        fail(key, "expected a comma-separated list of numbers, got '" + s + "'");
      }
    }
    return out;
  }

  template <class E>
  E choice(const std::string& key, std::initializer_list<std::pair<const char*, E>> options) const {
    const std::string s = text(key);
    std::string names;
    for (const auto& [name, value] : options) {
      if (s == name) return value;
      names += (names.empty() ? "" : ", ") + std::string(name);
    }
    fail(key, "unknown value '" + s + "' (expected " + names + ")");
  }

  template <class T, class F>
  void optional(const std::string& key, T& target, F&& get) const {
    if (has(key)) target = get(key);
  }

  // Every key present in the file must have been consumed.
  void reject_unused() const {
    for (const auto& [section, child] : tree_) {
      if (child.empty() && !child.data().empty()) fail(section, "key outside of any section");
      for (const auto& [key, value] : child) {
        const std::string full = section + "." + key;
        if (!used_.count(full)) fail(full, "unknown key");
      }
    }
  }

  std::vector<std::string> keys(const std::string& section) const {
    std::vector<std::string> out;
    if (auto c = tree_.get_child_optional(section))
      for (const auto& [key, value] : *c) out.push_back(key);
    return out;
  }

  void check_sections(const std::set<std::string>& known) const {
    for (const auto& [section, child] : tree_)
      if (!known.count(section)) fail(section, "unknown section");
  }

 private:
  static std::string section_of(const std::string& key) { return key.substr(0, key.find('.')); }
  static std::string name_of(const std::string& key) {
    const auto d = key.find('.');
    return d == std::string::npos ? std::string() : key.substr(d + 1);
  }
  static pt::ptree::path_type path(const std::string& key) { return pt::ptree::path_type(key, '.'); }

  pt::ptree tree_;
  std::map<std::string, int> lines_;
  std::string source_;
  mutable std::set<std::string> used_;
};

PresetSpec read_preset(const Reader& r, const std::string& section,
                       std::vector<std::string> (*keys_of)(const std::string&)) {
  PresetSpec p;
  p.name = r.text(section + ".preset");
  std::vector<std::string> keys;
  try {
    keys = keys_of(p.name);
  } catch (const std::invalid_argument& e) {
    r.fail(section + ".preset", e.what());
  }
  for (const auto& k : keys) p.values[k] = r.number(section + "." + k);
  return p;
}

}  // namespace

RunConfig parse_config(std::istream& is, const std::string& source) {
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  pt::ptree tree;
  try {
    std::istringstream ss(text);
    pt::read_ini(ss, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  const Reader r(std::move(tree), key_lines(text), source);
  r.check_sections({"model", "force", "theta0", "approx", "grid", "solver", "schedule", "output", "analysis", "run"});

  RunConfig c;
  ModelParams& m = c.model;
  m.gamma = r.number("model.gamma");
  m.m = r.number("model.m");
  m.l = r.number("model.l");
  m.mu = r.number("model.mu");
  m.lambda = r.number("model.lambda");
  m.f = r.number("model.f");
  m.a1 = r.number("model.a1");
  m.a2 = r.number("model.a2");
  m.a3 = r.number("model.a3");
  m.a4 = r.number("model.a4");
  m.M = r.number("model.M");
  c.force = read_preset(r, "force", &force_preset_keys);
  c.theta0 = read_preset(r, "theta0", &theta0_preset_keys);

  c.approx.epsilon = r.number("approx.epsilon");
  c.approx.k = r.number("approx.k");

  c.grid.lx = r.number("grid.lx");
  c.grid.ly = r.number("grid.ly");
  c.grid.nx = r.integer("grid.nx");
  c.grid.ny = r.integer("grid.ny");

  SolveOptions& s = c.solver;
  r.optional("solver.newton_tol", s.newton_tol, [&](auto& k) { return r.number(k); });
  r.optional("solver.max_iter", s.max_iter, [&](auto& k) { return r.integer(k); });
  r.optional("solver.picard_damping", s.picard_damping, [&](auto& k) { return r.number(k); });
  r.optional("solver.linear_solver_tol", s.linear_solver_tol, [&](auto& k) { return r.number(k); });
  r.optional("solver.linear_backend", s.linear_backend, [&](auto& k) {
    return r.choice<LinearBackend>(k, {{"direct", LinearBackend::Direct}, {"iterative", LinearBackend::Iterative}});
  });
  r.optional("solver.continuity_method", s.continuity_method, [&](auto& k) {
    return r.choice<ContinuityMethod>(k, {{"picard", ContinuityMethod::Picard}, {"newton", ContinuityMethod::Newton}});
  });

  ContinuationSchedule& sc = c.schedule;
  r.optional("schedule.t_steps", sc.t_steps, [&](auto& k) { return r.list(k); });
  r.optional("schedule.damping", sc.damping, [&](auto& k) { return r.number(k); });
  r.optional("schedule.tolerance", sc.tolerance, [&](auto& k) { return r.number(k); });
  r.optional("schedule.stage_tolerances", sc.stage_tolerances, [&](auto& k) { return r.list(k); });
  r.optional("schedule.max_outer", sc.max_outer, [&](auto& k) { return r.integer(k); });
  r.optional("schedule.min_t_step", sc.restart.min_t_step, [&](auto& k) { return r.number(k); });
  r.optional("schedule.max_restarts", sc.restart.max_restarts, [&](auto& k) { return r.integer(k); });
  r.optional("schedule.min_damping", sc.restart.min_damping, [&](auto& k) { return r.number(k); });
  r.optional("schedule.map", sc.map, [&](auto& k) {
    return r.choice<MapVariant>(k, {{"joint", MapVariant::Joint}, {"sequential", MapVariant::Sequential}});
  });

  OutputSpec& o = c.output;
  r.optional("output.directory", o.directory, [&](auto& k) { return r.text(k); });
  r.optional("output.write_fields", o.write_fields, [&](auto& k) { return r.boolean(k); });
  r.optional("output.checkpoints", o.checkpoints, [&](auto& k) { return r.boolean(k); });
  r.optional("output.sweep_epsilon", o.sweep_epsilon, [&](auto& k) { return r.list(k); });
  r.optional("output.sweep_k", o.sweep_k, [&](auto& k) { return r.list(k); });

  if (r.has("analysis.eta")) c.eta = r.number("analysis.eta");
  r.optional("run.validation", c.validation, [&](auto& k) {
    return r.choice<ValidationMode>(k, {{"strict", ValidationMode::Strict}, {"exploratory", ValidationMode::Exploratory}});
  });
  r.optional("run.initial_state", c.initial_state, [&](auto& k) { return r.text(k); });
  r.reject_unused();

  // Semantic checks that do not depend on the solve.
  auto wrap = [&](auto&& fn, const std::string& key) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      r.fail(key, e.what());
    }
  };
  wrap([&] { (void)c.grid.make(); }, "grid.nx");
  wrap([&] { c.solver.validate(); }, "solver");
  wrap([&] { c.schedule.validate(); }, "schedule.t_steps");
  wrap([&] { (void)make_force(c.force, c.grid.lx, c.grid.ly); }, "force.preset");
  wrap([&] { (void)make_theta0(c.theta0, c.grid.lx, c.grid.ly); }, "theta0.preset");
  if (c.eta && !(*c.eta > 0.0)) r.fail("analysis.eta", "must be > 0");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  return parse_config(in, path);
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  auto num = [](double x) { return format_number(x); };
  auto list = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + num(v[k]);
    return s;
  };
  const ModelParams& m = c.model;
  os << "[model]\n"
     << "gamma = " << num(m.gamma) << "\nm = " << num(m.m) << "\nl = " << num(m.l) << "\nmu = " << num(m.mu)
     << "\nlambda = " << num(m.lambda) << "\nf = " << num(m.f) << "\na1 = " << num(m.a1) << "\na2 = " << num(m.a2)
     << "\na3 = " << num(m.a3) << "\na4 = " << num(m.a4) << "\nM = " << num(m.M) << "\n\n";
  auto preset = [&](const char* section, const PresetSpec& p) {
    os << '[' << section << "]\npreset = " << p.name << '\n';
    for (const auto& [k, v] : p.values) os << k << " = " << num(v) << '\n';
    os << '\n';
  };
  preset("force", c.force);
  preset("theta0", c.theta0);
  os << "[approx]\nepsilon = " << num(c.approx.epsilon) << "\nk = " << num(c.approx.k) << "\n\n";
  os << "[grid]\nlx = " << num(c.grid.lx) << "\nly = " << num(c.grid.ly) << "\nnx = " << c.grid.nx
     << "\nny = " << c.grid.ny << "\n\n";
  const SolveOptions& s = c.solver;
  os << "[solver]\nnewton_tol = " << num(s.newton_tol) << "\nmax_iter = " << s.max_iter
     << "\npicard_damping = " << num(s.picard_damping) << "\nlinear_solver_tol = " << num(s.linear_solver_tol)
     << "\nlinear_backend = " << to_string(s.linear_backend)
     << "\ncontinuity_method = " << to_string(s.continuity_method) << "\n\n";
  const ContinuationSchedule& sc = c.schedule;
  os << "[schedule]\nt_steps = " << list(sc.t_steps) << "\ndamping = " << num(sc.damping)
     << "\ntolerance = " << num(sc.tolerance) << '\n';
  if (!sc.stage_tolerances.empty()) os << "stage_tolerances = " << list(sc.stage_tolerances) << '\n';
  os << "max_outer = " << sc.max_outer << "\nmin_t_step = " << num(sc.restart.min_t_step)
     << "\nmax_restarts = " << sc.restart.max_restarts << "\nmin_damping = " << num(sc.restart.min_damping)
     << "\nmap = " << to_string(sc.map) << "\n\n";
  const OutputSpec& o = c.output;
  os << "[output]\ndirectory = " << o.directory << "\nwrite_fields = " << (o.write_fields ? "true" : "false")
     << "\ncheckpoints = " << (o.checkpoints ? "true" : "false") << '\n';
  if (!o.sweep_epsilon.empty()) os << "sweep_epsilon = " << list(o.sweep_epsilon) << '\n';
  if (!o.sweep_k.empty()) os << "sweep_k = " << list(o.sweep_k) << '\n';
  os << '\n';
  if (c.eta) os << "[analysis]\neta = " << num(*c.eta) << "\n\n";
  os << "[run]\nvalidation = " << to_string(c.validation) << '\n';
  if (!c.initial_state.empty()) os << "initial_state = " << c.initial_state << '\n';
  return os.str();
}

}  // namespace nsf

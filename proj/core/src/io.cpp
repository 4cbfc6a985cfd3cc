#include "nsf/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace nsf {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return std::signbit(x) ? "-0" : "0";
  const double a = std::abs(x);
  const auto fmt = (a < 1e-3 || a >= 1e6) ? std::chars_format::scientific : std::chars_format::fixed;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, fmt);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double x = 0.0;
  const char* first = s.data();
  // from_chars does not accept a leading '+'.
  if (!s.empty() && s.front() == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return x;
}

namespace {

template <class F>
void write_table(std::ostream& os, int nx, int ny, F&& at) {
  os << "i,j,x,y,value\n";
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const auto [p, value] = at(i, j);
      os << i << ',' << j << ',' << format_number(p.x) << ',' << format_number(p.y) << ',' << format_number(value)
         << '\n';
    }
}

const char* side_name(Side s) {
  switch (s) {
    case Side::Bottom: return "bottom";
    case Side::Right: return "right";
    case Side::Top: return "top";
    case Side::Left: return "left";
  }
  return "?";
}

}  // namespace

void write_field_csv(std::ostream& os, const ScalarField& s, const Grid& g) {
  g.check(s);
  write_table(os, s.nx(), s.ny(), [&](int i, int j) { return std::pair{g.cell_center(i, j), s(i, j)}; });
}

void write_field_csv(std::ostream& os, const NodeField& s, const Grid& g) {
  g.check(s);
  write_table(os, s.nx(), s.ny(), [&](int i, int j) { return std::pair{g.node(i, j), s(i, j)}; });
}

void write_field_csv(std::ostream& os, const XFaceField& u, const Grid& g) {
  write_table(os, u.nx(), u.ny(), [&](int i, int j) { return std::pair{g.xface_center(i, j), u(i, j)}; });
}

void write_field_csv(std::ostream& os, const YFaceField& v, const Grid& g) {
  write_table(os, v.nx(), v.ny(), [&](int i, int j) { return std::pair{g.yface_center(i, j), v(i, j)}; });
}

void write_boundary_csv(std::ostream& os, const BoundaryField& b, const Grid& g) {
  g.check(b);
  os << "side,face,x,y,value\n";
  const auto& bf = g.boundary();
  for (std::size_t k = 0; k < bf.size(); ++k)
    os << side_name(bf[k].side) << ',' << k << ',' << format_number(bf[k].center.x) << ','
       << format_number(bf[k].center.y) << ',' << format_number(b.values[k]) << '\n';
}

// Restart file layout:
//   nsf-state 1
//   grid <lx> <ly> <nx> <ny>
//   <name> <count>
//   <count values, one per line>
// for name in rho, u, v, s, s_boundary, in that order.
namespace {

void write_block(std::ostream& os, const char* name, const std::vector<double>& x) {
  os << name << ' ' << x.size() << '\n';
  for (double a : x) os << format_number(a) << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}
  std::string next() {
    std::string line;
    ++line_;
    if (!std::getline(is_, line)) fail("unexpected end of file");
    return line;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("state file line " + std::to_string(line_) + ": " + what);
  }
  double number(const std::string& s) const {
    try {
      return parse_number(s);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

 private:
  std::istream& is_;
  int line_ = 0;
};

void read_block(LineReader& in, const char* name, std::vector<double>& x) {
  std::istringstream head(in.next());
  std::string tag;
  std::size_t count = 0;
  if (!(head >> tag >> count) || tag != name) in.fail(std::string("expected block '") + name + " <count>'");
  if (count != x.size())
    in.fail(std::string("block ") + name + " has " + std::to_string(count) + " values, grid needs " +
            std::to_string(x.size()));
  for (double& a : x) a = in.number(in.next());
}

}  // namespace

void write_state(std::ostream& os, const State& st, const Grid& g) {
  check_state(st, g);
  os << "nsf-state 1\n";
  os << "grid " << format_number(g.lx()) << ' ' << format_number(g.ly()) << ' ' << g.nx() << ' ' << g.ny() << '\n';
  write_block(os, "rho", st.rho.raw());
  write_block(os, "u", st.v.u.raw());
  write_block(os, "v", st.v.v.raw());
  write_block(os, "s", st.s.raw());
  write_block(os, "s_boundary", st.s_boundary.values);
}

StateFile read_state(std::istream& is) {
  LineReader in(is);
  if (in.next() != "nsf-state 1") in.fail("missing header 'nsf-state 1'");
  std::istringstream gl(in.next());
  std::string tag, lx, ly;
  int nx = 0, ny = 0;
  if (!(gl >> tag >> lx >> ly >> nx >> ny) || tag != "grid") in.fail("expected 'grid <lx> <ly> <nx> <ny>'");
  StateFile out{Grid(in.number(lx), in.number(ly), nx, ny), {}};
  const Grid& g = out.grid;
  out.state = State{g.cells(), g.faces(), g.cells(), g.boundary_field()};
  read_block(in, "rho", out.state.rho.raw());
  read_block(in, "u", out.state.v.u.raw());
  read_block(in, "v", out.state.v.v.raw());
  read_block(in, "s", out.state.s.raw());
  read_block(in, "s_boundary", out.state.s_boundary.values);
  check_state(out.state, g);
  return out;
}

}  // namespace nsf

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "nsf/state.hpp"

namespace nsf {

// Shortest decimal string that parses back to the same double. Always uses
// '.' as decimal separator and switches to scientific notation for
// 0 < |x| < 1e-3 and |x| >= 1e6. Non-finite values print as nan, inf, -inf.
std::string format_number(double x);
// Inverse of format_number; throws std::invalid_argument on trailing junk.
double parse_number(std::string_view s);

// Field tables with header "i,j,x,y,value", one row per location, j-major.
void write_field_csv(std::ostream& os, const ScalarField& s, const Grid& g);
void write_field_csv(std::ostream& os, const NodeField& s, const Grid& g);
// Normal components on x-faces ("u") or y-faces ("v").
void write_field_csv(std::ostream& os, const XFaceField& u, const Grid& g);
void write_field_csv(std::ostream& os, const YFaceField& v, const Grid& g);
// "side,face,x,y,value" for each boundary face.
void write_boundary_csv(std::ostream& os, const BoundaryField& b, const Grid& g);

// Text serialization of a State together with its grid. Values are written
// with format_number, so read_state(write_state(x)) reproduces x bit for bit.
void write_state(std::ostream& os, const State& st, const Grid& g);
struct StateFile {
  Grid grid;
  State state;
};
// Throws std::runtime_error with the offending line number on malformed input.
StateFile read_state(std::istream& is);

}  // namespace nsf

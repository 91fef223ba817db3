#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pws/geometry.hpp"

namespace pws {

/// Exit codes: 0 success, 1 module error (`ErrorKind: message` on stderr),
/// 2 configuration or usage error. `args` mirrors argv: args[0] is the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses a radius with an optional unit suffix (mm, m, deg, rad) into SI
/// units for the axis. Throws InvalidArgument for a unit that does not fit
/// the axis or a malformed number.
double parse_radius(std::string_view text, Axis axis);

}  // namespace pws

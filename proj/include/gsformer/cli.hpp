#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gsformer/errors.hpp"

namespace gsf {

// 2 usage, 3 data, 4 config (and shape contracts), 5 numeric.
int exit_code(ErrorKind kind);

// "error[E<code>] <kind>: <message>", one line.
std::string format_error(ErrorKind kind, const std::string& message);

// Entry point of the gsformer tool; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gsf

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wptlab::cli {

// Runs one wptlab invocation; args excludes the program name. Returns the
// process exit code: 0 success, 1 when any output row carries an error flag,
// 2 for usage and input errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "start:stop:step" (inclusive) or a comma-separated list.
std::vector<double> parse_range(const std::string& text);

}  // namespace wptlab::cli

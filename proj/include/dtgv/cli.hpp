#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dtgv::cli {

/// Exit statuses of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;  ///< a library error contract fired
inline constexpr int kExitUsage = 2;  ///< malformed command line or manifest

/// Runs one command. args[0] is the program name. Normal output goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "a,b,c" into doubles; throws on an empty or malformed list.
std::vector<double> parse_list(const std::string& text);

/// count points spaced evenly in log10 between lo and hi, inclusive.
std::vector<double> log_grid(double lo, double hi, int count);

}  // namespace dtgv::cli

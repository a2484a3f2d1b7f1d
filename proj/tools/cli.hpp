#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace liddense::cli {

inline constexpr int kReportFormatVersion = 1;

/// Runs one command line. Exit status: 0 on success, 1 when some item or
/// check failed, 2 on invalid arguments or unreadable inputs.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace liddense::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcfsm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDiagnostics = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInternal = 3;

/// Runs the command line `args` (without the program name). Everything the
/// command prints goes to `out` and `err`, which keeps it testable.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcfsm::cli

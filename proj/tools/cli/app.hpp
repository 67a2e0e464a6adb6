#pragma once

#include <iosfwd>

namespace scglove::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Parses `argv` (program name first, then the subcommand) and runs it.
/// Returns 0 on success, 1 on a usage error, 2 on a data error.
int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scglove::cli

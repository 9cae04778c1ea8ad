// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace treeseek::cli {

/// Exit codes: 0 success, 1 usage, 2 data or format error, 3 internal error.
enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

/// Parses argv and runs one subcommand. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace treeseek::cli

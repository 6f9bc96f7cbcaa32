// Copyright 2026 The weakprior Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WEAKPRIOR_TOOLS_CLI_HPP
#define WEAKPRIOR_TOOLS_CLI_HPP

#include <ostream>

namespace weakprior::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kConfigError = 2 };

/// Entry point of the `weakprior` tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace weakprior::cli

#endif  // WEAKPRIOR_TOOLS_CLI_HPP

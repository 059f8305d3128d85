#pragma once

#include <string>
#include <vector>

namespace rigidflow {

/// Subcommand dispatcher. Exit codes: 0 success, 1 validation error,
/// 2 numerical failure, 3 collision stop (simulate; outputs still written),
/// 64 unknown subcommand or usage error.
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace rigidflow

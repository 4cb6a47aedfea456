#pragma once

#include <string>
#include <vector>

namespace slamacc {

/// Runs one tool subcommand (args exclude the program name). Returns the
/// process exit code: 0 on success, 1 for usage or validation problems,
/// 2 for I/O failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace slamacc

#pragma once

#include <filesystem>
#include <string>

namespace flmc::testing {

/// Runs `command` through the shell and returns its exit status (-1 if it did not exit normally).
int run_command(const std::string& command);

std::string read_file(const std::filesystem::path& path);

/// Fresh empty directory under the system temp directory.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace flmc::testing

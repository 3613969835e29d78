#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsbag {

inline constexpr const char* kVersion = "0.3.0";

/// Exit codes: 0 success, 1 invalid input or usage, 2 internal error.
/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// SHA-256 of a file's bytes, lowercase hex.
std::string file_sha256(const std::string& path);

}  // namespace gsbag

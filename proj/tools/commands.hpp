// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace replica_cdma::cli {

inline constexpr const char* kVersion = "0.1.0";

// Full command-line entry point. Returns the process exit code:
// 0 on success, 1 if any output row carries an error, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace replica_cdma::cli

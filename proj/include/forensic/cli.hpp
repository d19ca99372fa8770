#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace forensic {

// Exit codes: 0 success, 1 user or input error, 2 internal error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitInternalError = 2;

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace forensic

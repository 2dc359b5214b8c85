#pragma once

// Front end for the shrinkglht command-line tool. Exit codes: 0 success,
// 2 validation or input error, 3 numerical failure.

#include <ostream>
#include <string>
#include <vector>

namespace shrinkglht::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Thread count used when --threads is absent: SHRINKGLHT_THREADS if set, else 1.
int default_threads();

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shrinkglht::cli

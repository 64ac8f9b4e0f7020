#pragma once

#include <ostream>
#include <string>

namespace phmmw {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point of the `phmmw` tool. Returns 0 on success, 1 on input errors
/// (including bad flags) and 2 on internal errors. Errors are printed to
/// `err` as `code: message`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace phmmw

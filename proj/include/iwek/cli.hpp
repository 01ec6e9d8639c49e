#ifndef IWEK_CLI_HPP
#define IWEK_CLI_HPP

#include <iosfwd>

namespace iwek {

// Exit codes: 0 ok, 1 usage, 2 data or validation error, 3 internal error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace iwek

#endif  // IWEK_CLI_HPP

#ifndef AMPNN_TOOLS_CLI_HPP
#define AMPNN_TOOLS_CLI_HPP

#include <iosfwd>

namespace ampnn::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kSuccess = 0,
  kValidation = 2,
  kIo = 3,
  kDivergence = 4,
  kReproductionFailed = 5,
};

/// Environment variable naming the root directory for relative output paths.
inline constexpr const char* kOutputRootVariable = "AMPNN_OUTPUT_ROOT";

/// Runs one command line (argv[0] is the program name). Failures print a
/// single `error[<category>]: <message>` line on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ampnn::cli

#endif  // AMPNN_TOOLS_CLI_HPP

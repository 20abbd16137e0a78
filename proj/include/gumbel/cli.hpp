#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gumbel {

// Command-line driver behind the `gumbel_lambda` binary, parametrized on
// streams so tests can run it in-process. `args` excludes the program name.
// Returns the process exit code: 0 success, 1 runtime failure, 2 bad
// configuration or usage.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace gumbel

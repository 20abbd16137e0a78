#pragma once

#include <stdexcept>
#include <string>

namespace gumbel {

// Bad user input: malformed files, inconsistent parameters, out-of-range
// configuration. The CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Failure while computing: lost root brackets, divergent series, degenerate
// statistics, internal-consistency violations. The CLI maps this to exit 1.
struct compute_error : std::runtime_error {
    explicit compute_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gumbel

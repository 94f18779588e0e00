#pragma once

#include "fnse/config.hpp"

namespace fnse {

/// Executes the configured command, writes CSV reports and field dumps into
/// the output directory, prints one summary line per check.
/// Returns 0 if every check passed, 1 if any failed. Runtime errors
/// propagate as exceptions (the CLI maps them to exit code 2).
int run(const RunConfig& config);

}  // namespace fnse

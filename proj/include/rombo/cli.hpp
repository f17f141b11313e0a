#pragma once

#include "rombo/config.hpp"

namespace rombo {

/// Scenario described by a run configuration (builtin or custom model).
Scenario build_scenario(const RunConfig& cfg);

/// Command-line entry point. Returns 0 on success, 2 on usage errors and 1 on
/// any other failure.
int run_cli(int argc, char** argv);

}  // namespace rombo
